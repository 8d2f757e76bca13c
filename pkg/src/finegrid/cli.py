"""Command-line entry points: ``run``, ``sweep`` and ``snapshot``.

Outputs go to the config's ``output_dir`` unless the ``FINEGRID_OUTPUT_DIR``
environment variable is set. Exit codes: 0 ok, 1 configuration error,
2 invariant violation (a JSON dump is written next to the outputs).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .engine import Simulation, run
from .errors import ConfigError, InvariantViolation
from .metrics import flow_windows, summarize_run
from .output import ascii_snapshot, emit_csv, render_snapshot, summary_rows, write_atomic
from .scenario import ScenarioConfig, parse_config

OUTPUT_ENV = "FINEGRID_OUTPUT_DIR"
DUMP_NAME = "invariant_dump.json"
FLOW_HEADER = ["window_start", "window_end", "crossings", "flow"]
BINS_HEADER = ["density_lo", "density_hi", "mean_speed", "count"]
SWEEP_HEADER = ["row", "ratio", "seed", "mean_flow", "peak_flow", "error"]


def output_dir(config: ScenarioConfig, override=None) -> Path:
    path = Path(override or os.environ.get(OUTPUT_ENV) or config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_dump(out: Path, err: InvariantViolation):
    body = {"error": str(err), "state": err.dump}
    write_atomic(out / DUMP_NAME, (json.dumps(body, indent=1) + "\n").encode())


def run_scenario(config: ScenarioConfig, out=None):
    """Run one scenario and write flow.csv, density_speed.csv, density_bins.csv
    and summary.csv. Returns the :class:`RunSummary`."""
    out = output_dir(config, out)
    scenario, engine_cfg = config.build()
    try:
        metrics = run(scenario, engine_cfg)
    except InvariantViolation as err:
        _write_dump(out, err)
        raise
    summary = summarize_run(metrics)

    t0, t1 = engine_cfg.warmup_s, engine_cfg.duration_s
    windows = flow_windows(metrics.flow_line, t0, t1, config.flow_window_s) if t1 > t0 else []
    emit_csv(windows, out / "flow.csv", header=FLOW_HEADER)
    emit_csv(metrics.samples, out / "density_speed.csv")
    emit_csv(summary.density_bins, out / "density_bins.csv", header=BINS_HEADER)
    extra = {
        "arrivals": metrics.arrivals,
        "exited": metrics.exited,
        "present": metrics.present,
        "queued": metrics.queued,
        "duplicate_crossings": metrics.flow_line.duplicates,
        "audits": metrics.audits,
        "seed": engine_cfg.rng_seed,
        "duration_s": engine_cfg.duration_s,
        "warmup_s": engine_cfg.warmup_s,
    }
    emit_csv(summary_rows(summary, extra), out / "summary.csv", header=["metric", "value"])
    return summary


def _sweep_point(args):
    config, ratio, profile, seed = args
    mixture = {"pedestrian": 1.0} if ratio == 0 else {"pedestrian": 1.0 - ratio, profile: ratio}
    try:
        cfg = config.with_overrides(mixture=mixture, rng_seed=seed)
        scenario, engine_cfg = cfg.build()
        s = summarize_run(run(scenario, engine_cfg))
        return ratio, seed, s.mean_flow, s.peak_flow_60s, ""
    except (ConfigError, InvariantViolation) as err:
        return ratio, seed, None, None, f"{type(err).__name__}: {err}"


def batch_sweep(config: ScenarioConfig, ratios, wheelchair_profile, seeds=3, jobs=1, out=None):
    """One run per (ratio, seed) plus a per-ratio mean row, written to sweep.csv.

    ``seeds`` is either a count (seeds ``config.seed``, ``config.seed + 1``, ...)
    or an explicit list. Failed runs are recorded in the error column and the
    sweep carries on. Returns the rows as written.
    """
    ratios = [float(r) for r in ratios]
    for r in ratios:
        if not 0.0 <= r <= 1.0:
            raise ConfigError(f"ratio {r} outside [0, 1]", key="ratios")
    if wheelchair_profile not in config.build_profiles():
        raise ConfigError(f"unknown profile {wheelchair_profile!r}", key="profile")
    if isinstance(seeds, int):
        seeds = [config.seed + k for k in range(seeds)]
    out = output_dir(config, out)

    tasks = [(config, r, wheelchair_profile, s) for r in ratios for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]

    rows = [["run", r, s, m, p, e] for r, s, m, p, e in results]
    for r in ratios:
        ok = [(m, p) for rr, _, m, p, e in results if rr == r and not e]
        if ok:
            rows.append(["mean", r, "", float(np.mean([m for m, _ in ok])),
                         float(np.mean([p for _, p in ok])), ""])
        else:
            rows.append(["mean", r, "", "", "", "no successful runs"])
    emit_csv([[("" if v is None else v) for v in row] for row in rows], out / "sweep.csv",
             header=SWEEP_HEADER)
    return rows


def snapshot(config: ScenarioConfig, at_s: float, out=None, stride=1):
    """Simulate up to ``at_s`` seconds and write snapshot.ppm and snapshot.txt."""
    if at_s < 0:
        raise ConfigError("must be non-negative", key="at")
    out = output_dir(config, out)
    scenario, engine_cfg = config.build()
    sim = Simulation(scenario, engine_cfg)
    try:
        sim.run_ticks(int(round(at_s / engine_cfg.tick_s)))
    except InvariantViolation as err:
        _write_dump(out, err)
        raise
    render_snapshot(sim, out / "snapshot.ppm")
    text = ascii_snapshot(sim, stride)
    write_atomic(out / "snapshot.txt", text.encode())
    return sim, text


def _ratio_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="finegrid", description="Fine-grid pedestrian and wheelchair corridor simulator.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run one scenario and write CSV outputs")
    p.add_argument("config")

    p = sub.add_parser("sweep", help="sweep the wheelchair ratio over several seeds")
    p.add_argument("config")
    p.add_argument("--ratios", type=_ratio_list, default=[0.0, 0.05, 0.10, 0.15, 0.20])
    p.add_argument("--profile", default="nonassisted_wheelchair")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("snapshot", help="render the grid at a given time")
    p.add_argument("config")
    p.add_argument("--at", type=float, required=True, help="simulation time in seconds")
    p.add_argument("--stride", type=int, default=1, help="ASCII downsampling step")
    p.add_argument("--print", action="store_true", help="also print the ASCII view")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        if args.verb == "run":
            s = run_scenario(config)
            print(f"mean_flow {s.mean_flow:.4f}  peak_flow_60s {s.peak_flow_60s:.4f}  "
                  f"crossings {s.crossings}  -> {output_dir(config)}")
        elif args.verb == "sweep":
            if args.seeds < 1:
                raise ConfigError("must be >= 1", key="seeds")
            rows = batch_sweep(config, args.ratios, args.profile, args.seeds, args.jobs)
            for row in rows:
                if row[0] == "mean":
                    flow = "failed" if row[3] == "" else f"{row[3]:.4f}"
                    print(f"ratio {row[1]:.2f}  mean_flow {flow}")
        else:
            _, text = snapshot(config, args.at, stride=max(1, args.stride))
            if args.print:
                sys.stdout.write(text)
            print(f"wrote snapshot.ppm and snapshot.txt -> {output_dir(config)}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except InvariantViolation as err:
        print(f"invariant violation: {err} (dump: {DUMP_NAME})", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
