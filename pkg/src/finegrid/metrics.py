"""Flow-line counting, density-speed sampling and run summaries."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

DENSITY_BIN_WIDTH = 0.25
PEAK_WINDOW_S = 60.0


@dataclass
class FlowLine:
    """Transverse line at ``x = position_m`` spanning a passage ``width_m`` wide."""

    position_m: float
    width_m: float
    crossings: list = field(default_factory=list)
    duplicates: int = 0
    _seen: set = field(default_factory=set, repr=False)

    def times(self) -> np.ndarray:
        return np.array([t for _, _, t in self.crossings], dtype=float)


@dataclass(frozen=True)
class DensitySpeedSample:
    time: float
    agent_id: int
    profile: str
    perceived_density: float
    realized_speed: float


@dataclass
class RunMetrics:
    flow_line: FlowLine | None = None
    samples: list = field(default_factory=list)
    queue_lengths: list = field(default_factory=list)
    audits: int = 0
    arrivals: int = 0
    exited: int = 0
    present: int = 0
    queued: int = 0
    duration_s: float = 0.0
    warmup_s: float = 0.0


@dataclass
class RunSummary:
    mean_flow: float
    peak_flow_60s: float
    crossings: int
    profile_counts: dict
    density_bins: list  # (bin_lo, bin_hi, mean_speed, count)
    queue_mean: float
    queue_max: int


def record_crossing(flow_line: FlowLine, agent_id, profile_name, time) -> bool:
    """Append a forward crossing; a repeat by the same agent is only counted as duplicate."""
    agent_id = int(agent_id)
    if agent_id in flow_line._seen:
        flow_line.duplicates += 1
        return False
    flow_line._seen.add(agent_id)
    flow_line.crossings.append((agent_id, profile_name, float(time)))
    return True


def measure_flow(flow_line: FlowLine, t0: float, t1: float) -> float:
    """Crossings per second per meter of width in the half-open window (t0, t1]."""
    if not t1 > t0:
        raise ValueError(f"empty flow window [{t0}, {t1}]")
    times = flow_line.times()
    n = int(np.count_nonzero((times > t0) & (times <= t1)))
    return n / (t1 - t0) / flow_line.width_m


def sample_density_speed(sim) -> list:
    """One sample per in-grid agent: perceived density and trailing-window speed."""
    ids = sim.active
    now = sim.time
    window = now - sim.mark_time[ids]
    dist = sim.odo[ids] - sim.odo_mark[ids]
    speed = np.divide(dist, window, out=np.zeros(len(ids)), where=window > 0)
    names = sim.profile_names
    return [
        DensitySpeedSample(now, int(a), names[sim.prof[a]], float(sim.density[a]), float(v))
        for a, v in zip(ids, speed)
    ]


def _density_bins(samples, width=DENSITY_BIN_WIDTH):
    if not samples:
        return []
    rho = np.array([s.perceived_density for s in samples])
    v = np.array([s.realized_speed for s in samples])
    idx = np.floor(rho / width + 1e-9).astype(np.int64)
    out = []
    for b in np.unique(idx):
        sel = idx == b
        out.append((b * width, (b + 1) * width, float(v[sel].mean()), int(sel.sum())))
    return out


def summarize(samples, crossings, config) -> RunSummary:
    """Aggregate a finished run.

    ``crossings`` is a :class:`FlowLine`; ``config`` needs ``warmup_s`` and
    ``duration_s``. Flows only count crossings after the warm-up.
    """
    t0, t1 = config.warmup_s, config.duration_s
    flow_line = crossings
    times = flow_line.times() if flow_line is not None else np.empty(0)
    width = flow_line.width_m if flow_line is not None else 1.0
    post = times[(times > t0) & (times <= t1)]
    span = t1 - t0
    mean_flow = len(post) / span / width if span > 0 else 0.0

    peak = 0.0
    if span > 0:
        win = min(PEAK_WINDOW_S, span)
        starts = t0 + np.arange(0.0, span - win + 1e-9, 1.0)
        if len(starts):
            post_sorted = np.sort(post)
            lo = np.searchsorted(post_sorted, starts, side="right")
            hi = np.searchsorted(post_sorted, starts + win, side="right")
            peak = float((hi - lo).max()) / win / width

    counts = Counter()
    if flow_line is not None:
        for _, name, t in flow_line.crossings:
            if t0 < t <= t1:
                counts[name] += 1
    post_samples = [s for s in samples if s.time > t0 - 1e-9]
    queue = getattr(config, "queue_lengths", None) or []
    return RunSummary(
        mean_flow=float(mean_flow),
        peak_flow_60s=peak,
        crossings=int(len(post)),
        profile_counts=dict(counts),
        density_bins=_density_bins(post_samples),
        queue_mean=float(np.mean(queue)) if queue else 0.0,
        queue_max=int(max(queue)) if queue else 0,
    )


def summarize_run(metrics: RunMetrics) -> RunSummary:
    return summarize(metrics.samples, metrics.flow_line, metrics)


def weidmann_reference(bins, curve, min_count=30):
    """Bin centres, simulated means and reference speeds for well-populated bins."""
    rows = [(0.5 * (lo + hi), m) for lo, hi, m, n in bins if n >= min_count]
    if not rows:
        return np.empty(0), np.empty(0), np.empty(0)
    centres = np.array([r[0] for r in rows])
    means = np.array([r[1] for r in rows])
    ref = np.array([curve(c) for c in centres])
    return centres, means, ref


def flow_windows(flow_line: FlowLine, t0, t1, window_s):
    """Consecutive (start, end, crossings, flow) windows covering [t0, t1]."""
    out = []
    times = flow_line.times()
    n = int(math.floor((t1 - t0) / window_s + 1e-9))
    for k in range(n):
        a = t0 + k * window_s
        b = a + window_s
        c = int(np.count_nonzero((times > a) & (times <= b)))
        out.append((a, b, c, c / window_s / flow_line.width_m))
    return out
