"""JSON scenario files for the corridor experiment.

The corridor runs along x (grid columns): agents enter through a source strip
at x = 0 and leave through a target strip at the far end. A minimal file::

    {"width_m": 3, "length_m": 20,
     "source": {"rate": 3.0, "mixture": {"pedestrian": 1.0}}}

Everything else falls back to the defaults below.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .engine import EngineConfig, Scenario, SourceSpec, TICK_S
from .errors import ConfigError
from .grid import build_grid
from .metrics import FlowLine
from .profiles import (
    BUILTIN_SHAPES,
    BodyMap,
    DensitySpeedCurve,
    EntityProfile,
    Shape,
    builtin_curve,
    builtin_profile,
    scale_curve,
)

TARGET = "exit"

_TOP_KEYS = {
    "width_m", "length_m", "obstacles", "source", "target_depth_m", "curve_family",
    "lambda", "seed", "duration_s", "warmup_s", "tick_s", "perception_depth_m",
    "perception_halfwidth_m", "density_refresh_ticks", "audit_every_ticks",
    "flow_line_m", "flow_window_s", "output_dir", "profiles",
}
_SOURCE_KEYS = {"rate", "mixture", "depth_m"}
_PROFILE_KEYS = {"base", "free_flow_speed", "shape", "curve"}
_SHAPE_KEYS = {"kind", "width_m", "length_m"}


@dataclass
class ScenarioConfig:
    width_m: float = 3.0
    length_m: float = 20.0
    obstacles: list = field(default_factory=list)
    source_rate: float = 6.0
    mixture: dict = field(default_factory=lambda: {"pedestrian": 1.0})
    source_depth_m: float = 1.0
    target_depth_m: float = 1.0
    curve_family: str = "weidmann"
    engine: EngineConfig = field(default_factory=EngineConfig)
    flow_line_m: float | None = None
    flow_window_s: float = 10.0
    output_dir: str = "out"
    profiles: dict = field(default_factory=dict)  # raw overrides, validated on build

    def __post_init__(self):
        if not (self.width_m > 0 and self.length_m > 0):
            raise ConfigError("corridor dimensions must be positive", key="width_m")
        if self.engine.duration_s <= self.engine.warmup_s and self.engine.duration_s > 0:
            raise ConfigError("duration must exceed warm-up", key="duration_s")
        if not 0 < self.source_depth_m < self.length_m:
            raise ConfigError("must lie inside the corridor", key="source.depth_m")
        if not 0 < self.target_depth_m < self.length_m - self.source_depth_m:
            raise ConfigError("must leave room between source and target",
                              key="target_depth_m")
        if self.flow_line_m is None:
            self.flow_line_m = self.length_m / 2
        if not self.source_depth_m <= self.flow_line_m <= self.length_m - self.target_depth_m:
            raise ConfigError("flow line must lie between source and target", key="flow_line_m")
        if not self.flow_window_s > 0:
            raise ConfigError("must be positive", key="flow_window_s")
        known = self.build_profiles()  # fail early on bad profile overrides
        for name in self.mixture:
            if name not in known:
                raise ConfigError(f"unknown profile {name!r}", key="source.mixture")
        SourceSpec((0, 0, self.source_depth_m, self.width_m), self.source_rate, self.mixture)

    @property
    def seed(self) -> int:
        return self.engine.rng_seed

    def with_overrides(self, **kw) -> "ScenarioConfig":
        engine_kw = {k: kw.pop(k) for k in list(kw) if k in EngineConfig.__dataclass_fields__}
        engine = replace(self.engine, **engine_kw) if engine_kw else self.engine
        return replace(self, engine=engine, **kw)

    def build_profiles(self) -> dict:
        out = {}
        for name in BUILTIN_SHAPES:
            out[name] = builtin_profile(name, self.curve_family)
        for name, spec in self.profiles.items():
            out[name] = _custom_profile(name, spec, self.curve_family, out)
        return out

    def build(self) -> tuple[Scenario, EngineConfig]:
        grid = build_grid(
            self.length_m, self.width_m, self.obstacles,
            targets={TARGET: (self.length_m - self.target_depth_m, 0.0,
                              self.length_m, self.width_m)},
        )
        all_profiles = self.build_profiles()
        used = {n: all_profiles[n] for n in self.mixture}
        source = SourceSpec((0.0, 0.0, self.source_depth_m, self.width_m),
                            self.source_rate, dict(self.mixture))
        scenario = Scenario(grid, TARGET, used, [source], FlowLine(self.flow_line_m, self.width_m))
        return scenario, self.engine


def _custom_profile(name, spec, family, known):
    _check_keys(spec, _PROFILE_KEYS, f"profiles.{name}")
    base_name = spec.get("base", "pedestrian")
    if base_name not in known:
        raise ConfigError(f"unknown base profile {base_name!r}", key=f"profiles.{name}.base")
    base = known[base_name]
    shape = base.shape
    if "shape" in spec:
        s = spec["shape"]
        _check_keys(s, _SHAPE_KEYS, f"profiles.{name}.shape")
        try:
            shape = Shape(s.get("kind", shape.kind), float(s.get("width_m", shape.width_m)),
                          float(s.get("length_m", shape.length_m)))
        except ConfigError as e:
            raise ConfigError(str(e), key=f"profiles.{name}.shape") from None
    try:
        if "curve" in spec:
            curve = DensitySpeedCurve.from_table(spec["curve"], name=f"{name}-table")
            if "free_flow_speed" in spec:
                curve = scale_curve(curve, float(spec["free_flow_speed"]))
        elif "free_flow_speed" in spec:
            curve = scale_curve(builtin_curve(family), float(spec["free_flow_speed"]))
        else:
            curve = base.curve
        return EntityProfile(name, BodyMap.from_shape(shape), curve.free_flow_speed, curve)
    except ConfigError as e:
        raise ConfigError(str(e).split(": ", 1)[-1], key=f"profiles.{name}") from None


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", key=where)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        prefix = f"{where}." if where else ""
        raise ConfigError("unknown key", key=prefix + unknown[0])


def _num(obj, key, default, where=""):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"expected a number, got {v!r}", key=where + key)
    return v


def config_from_dict(data: dict) -> ScenarioConfig:
    _check_keys(data, _TOP_KEYS, "")
    src = data.get("source", {})
    _check_keys(src, _SOURCE_KEYS, "source")
    mixture = src.get("mixture", {"pedestrian": 1.0})
    if not isinstance(mixture, dict) or not mixture:
        raise ConfigError("expected a non-empty object", key="source.mixture")
    for k, v in mixture.items():
        _num(mixture, k, None, "source.mixture.")
    total = sum(mixture.values())
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"ratios sum to {total:g}, not 1", key="source.mixture")

    obstacles = data.get("obstacles", [])
    if not isinstance(obstacles, list) or any(
        not isinstance(o, list) or len(o) != 4 for o in obstacles
    ):
        raise ConfigError("expected a list of [x0, y0, x1, y1]", key="obstacles")
    profiles = data.get("profiles", {})
    if not isinstance(profiles, dict):
        raise ConfigError("expected an object", key="profiles")
    family = data.get("curve_family", "weidmann")
    if family not in ("weidmann", "fruin"):
        raise ConfigError(f"unknown curve family {family!r}", key="curve_family")

    tick = _num(data, "tick_s", TICK_S)
    if tick != TICK_S:
        raise ConfigError(f"only {TICK_S} s is supported", key="tick_s")
    hw = data.get("perception_halfwidth_m")
    if hw is not None:
        hw = _num(data, "perception_halfwidth_m", None)
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"expected a non-negative integer, got {seed!r}", key="seed")
    refresh = data.get("density_refresh_ticks", 10)
    audit = data.get("audit_every_ticks", 100)
    for key, v in (("density_refresh_ticks", refresh), ("audit_every_ticks", audit)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ConfigError(f"expected a non-negative integer, got {v!r}", key=key)
    engine = EngineConfig(
        tick_s=tick,
        lam=_num(data, "lambda", 0.05),
        perception_depth_m=_num(data, "perception_depth_m", 2.0),
        perception_halfwidth_m=hw,
        density_refresh_ticks=refresh,
        rng_seed=seed,
        duration_s=_num(data, "duration_s", 1500.0),
        warmup_s=_num(data, "warmup_s", 100.0),
        audit_every_ticks=audit,
    )
    flow_line = data.get("flow_line_m")
    output_dir = data.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("expected a string", key="output_dir")
    return ScenarioConfig(
        width_m=_num(data, "width_m", 3.0),
        length_m=_num(data, "length_m", 20.0),
        obstacles=[[float(v) for v in o] for o in obstacles],
        source_rate=_num(src, "rate", 6.0, "source."),
        mixture={str(k): float(v) for k, v in mixture.items()},
        source_depth_m=_num(src, "depth_m", 1.0, "source."),
        target_depth_m=_num(data, "target_depth_m", 1.0),
        curve_family=family,
        engine=engine,
        flow_line_m=None if flow_line is None else _num(data, "flow_line_m", None),
        flow_window_s=_num(data, "flow_window_s", 10.0),
        output_dir=output_dir,
        profiles=profiles,
    )


def parse_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"no such file: {path}", key="config") from None
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}", key="config") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON at line {e.lineno} column {e.colno}: {e.msg}",
                          key="config") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", key="config")
    return config_from_dict(data)
