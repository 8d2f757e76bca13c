"""Entity classes: directional body maps, free-flow speeds, density-speed curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import CELL_SIZE_M, DIRECTIONS

MAX_SPEED_CELLS = 40
MAX_SPEED_M_S = MAX_SPEED_CELLS * CELL_SIZE_M

WEIDMANN_FREE_FLOW = 1.34
WEIDMANN_GAMMA = 1.913
WEIDMANN_JAM_DENSITY = 5.4
FRUIN_FREE_FLOW = 1.344
FRUIN_STALL_DENSITY = 4.0
# Largest allowed ratio between direction footprint sizes.
FOOTPRINT_BAND = 1.15


def weidmann_speed(density):
    """Kladek form of Weidmann's relation, clamped to zero at jam density."""
    rho = np.asarray(density, dtype=float)
    with np.errstate(divide="ignore"):
        inv = np.where(rho > 0, 1.0 / np.where(rho > 0, rho, 1.0), np.inf)
    v = WEIDMANN_FREE_FLOW * (1.0 - np.exp(-WEIDMANN_GAMMA * (inv - 1.0 / WEIDMANN_JAM_DENSITY)))
    v = np.where(rho >= WEIDMANN_JAM_DENSITY, 0.0, v)
    return np.maximum(v, 0.0) if v.ndim else float(max(v, 0.0))


@dataclass(frozen=True, eq=False)
class DensitySpeedCurve:
    """Piecewise-linear density (1/m^2) to speed (m/s) table."""

    densities: np.ndarray
    speeds: np.ndarray
    stall_density: float
    name: str = "custom"

    def __post_init__(self):
        rho = np.asarray(self.densities, dtype=float)
        v = np.asarray(self.speeds, dtype=float)
        if rho.ndim != 1 or rho.shape != v.shape or len(rho) < 2:
            raise ConfigError("curve needs >= 2 matching (density, speed) samples", key="curve")
        if rho[0] != 0.0:
            raise ConfigError("curve must start at density 0", key="curve")
        if np.any(np.diff(rho) <= 0):
            raise ConfigError("curve densities must be strictly increasing", key="curve")
        if np.any(np.diff(v) > 0) or np.any(v < 0):
            raise ConfigError("curve speeds must be non-negative and non-increasing", key="curve")
        if v[0] <= 0:
            raise ConfigError("curve free-flow speed must be positive", key="curve")
        if not self.stall_density > 0:
            raise ConfigError("stall density must be positive", key="curve")
        rho.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "densities", rho)
        object.__setattr__(self, "speeds", v)
        object.__setattr__(self, "stall_density", float(self.stall_density))

    @classmethod
    def from_table(cls, points, stall_density=None, name="custom"):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConfigError("curve table must be a list of [density, speed] pairs", key="curve")
        if stall_density is None:
            zero = np.flatnonzero(pts[:, 1] == 0.0)
            if len(zero) == 0:
                raise ConfigError("curve table never reaches speed 0; give stall_density",
                                  key="curve")
            stall_density = pts[zero[0], 0]
        return cls(pts[:, 0], pts[:, 1], stall_density, name)

    @property
    def free_flow_speed(self) -> float:
        return float(self.speeds[0])

    def __call__(self, density):
        return lookup_speed(self, density)


def lookup_speed(curve: DensitySpeedCurve, density: float) -> float:
    if density < 0:
        raise ValueError(f"negative density {density}")
    if density >= curve.stall_density:
        return 0.0
    return float(np.interp(density, curve.densities, curve.speeds))


def builtin_curve(name: str) -> DensitySpeedCurve:
    if name == "weidmann":
        rho = np.linspace(0.0, WEIDMANN_JAM_DENSITY, 109)
        return DensitySpeedCurve(rho, weidmann_speed(rho), WEIDMANN_JAM_DENSITY, "weidmann")
    if name == "fruin":
        # Only the two intercepts are fixed; the interior is a straight ramp.
        rho = np.linspace(0.0, FRUIN_STALL_DENSITY, 17)
        v = FRUIN_FREE_FLOW * (1.0 - rho / FRUIN_STALL_DENSITY)
        v[-1] = 0.0
        return DensitySpeedCurve(rho, v, FRUIN_STALL_DENSITY, "fruin")
    raise ConfigError(f"unknown curve family {name!r}", key="curve_family")


def scale_curve(pedestrian_curve: DensitySpeedCurve, v_ff_wheelchair: float) -> DensitySpeedCurve:
    """Stretch a pedestrian curve vertically to a new free-flow speed.

    Every speed sample is multiplied by ``v_ff_wheelchair / v_ff_pedestrian``;
    the stall density stays where the pedestrians stop.
    """
    if not v_ff_wheelchair > 0:
        raise ConfigError(f"free-flow speed must be positive, got {v_ff_wheelchair}",
                          key="free_flow_speed")
    factor = v_ff_wheelchair / pedestrian_curve.free_flow_speed
    speeds = pedestrian_curve.speeds * factor
    speeds[0] = v_ff_wheelchair
    # Pinning the intercept can leave the next sample one ulp above it.
    np.minimum(speeds, v_ff_wheelchair, out=speeds)
    return DensitySpeedCurve(
        pedestrian_curve.densities.copy(),
        speeds,
        pedestrian_curve.stall_density,
        f"{pedestrian_curve.name}*{factor:.6g}",
    )


@dataclass(frozen=True)
class Shape:
    """Body outline in meters: ``width_m`` across the heading, ``length_m`` along it."""

    kind: str
    width_m: float
    length_m: float

    def __post_init__(self):
        if self.kind not in ("ellipse", "rectangle"):
            raise ConfigError(f"unknown shape kind {self.kind!r}", key="shape")
        if not (self.width_m > 0 and self.length_m > 0):
            raise ConfigError("shape dimensions must be positive", key="shape")
        if max(self.width_m, self.length_m) > 10.0:
            raise ConfigError("shape larger than 10 m", key="shape")


def rasterize_body_map(shape: Shape, direction: int) -> np.ndarray:
    """Cells whose centers fall inside ``shape`` rotated to ``direction``.

    The outline is centred on the top-left corner of the centre cell, so even
    cell counts come out symmetric. Rectangle sides are half-open ([-h, h)),
    so a centre lying exactly on an edge belongs to one side only and an
    n-cell side yields n cells. Returns an (n, 2) array of (drow, dcol).
    """
    if not isinstance(shape, Shape):
        shape = Shape(*shape)
    half_len = shape.length_m / 2 / CELL_SIZE_M
    half_wid = shape.width_m / 2 / CELL_SIZE_M
    theta = math.radians(45 * (direction % 8))
    hx, hy = math.cos(theta), math.sin(theta)
    reach = int(math.ceil(math.hypot(half_len, half_wid))) + 1
    dr, dc = np.mgrid[-reach : reach + 1, -reach : reach + 1]
    x = dc + 0.5
    y = dr + 0.5
    along = x * hx + y * hy
    across = -x * hy + y * hx
    eps = 1e-9
    if shape.kind == "rectangle":
        inside = ((along >= -half_len - eps) & (along < half_len - eps)
                  & (across >= -half_wid - eps) & (across < half_wid - eps))
    else:
        inside = (along / half_len) ** 2 + (across / half_wid) ** 2 <= 1.0 + eps
    inside[reach, reach] = True
    cells = np.column_stack([dr[inside], dc[inside]]).astype(np.int64)
    return cells


@dataclass(frozen=True, eq=False)
class BodyMap:
    shape: Shape
    offsets: tuple

    @classmethod
    def from_shape(cls, shape: Shape) -> "BodyMap":
        offsets = tuple(rasterize_body_map(shape, k) for k in range(8))
        sizes = [len(o) for o in offsets]
        if max(sizes) > FOOTPRINT_BAND * min(sizes):
            raise ConfigError(
                f"{shape.kind} {shape.width_m} x {shape.length_m} m rasterizes to "
                f"{min(sizes)}..{max(sizes)} cells across directions (band is 15%)",
                key="shape",
            )
        return cls(shape, offsets)

    def cells_at(self, row, col, direction) -> np.ndarray:
        return self.offsets[direction] + np.array([row, col])

    @property
    def sizes(self):
        return [len(o) for o in self.offsets]


@dataclass(frozen=True, eq=False)
class EntityProfile:
    name: str
    body_map: BodyMap
    free_flow_speed: float
    curve: DensitySpeedCurve

    def __post_init__(self):
        if not 0 < self.free_flow_speed <= MAX_SPEED_M_S:
            raise ConfigError(
                f"free-flow speed {self.free_flow_speed} outside (0, {MAX_SPEED_M_S}]",
                key=f"profiles.{self.name}.free_flow_speed",
            )
        if abs(self.curve.free_flow_speed - self.free_flow_speed) > 1e-12:
            raise ConfigError("curve intercept differs from free-flow speed",
                              key=f"profiles.{self.name}.curve")

    @property
    def shape(self) -> Shape:
        return self.body_map.shape


PEDESTRIAN_SHAPE = Shape("ellipse", 0.50, 0.30)
NONASSISTED_SHAPE = Shape("rectangle", 0.70, 1.10)
ASSISTED_SHAPE = Shape("rectangle", 0.70, 1.60)

WHEELCHAIR_SPEEDS = {"assisted_wheelchair": 1.083, "nonassisted_wheelchair": 0.8}
BUILTIN_SHAPES = {
    "pedestrian": PEDESTRIAN_SHAPE,
    "assisted_wheelchair": ASSISTED_SHAPE,
    "nonassisted_wheelchair": NONASSISTED_SHAPE,
}


def builtin_profile(name: str, curve_family: str = "weidmann") -> EntityProfile:
    if name not in BUILTIN_SHAPES:
        raise ConfigError(f"unknown profile {name!r}", key="profile")
    ped_curve = builtin_curve(curve_family)
    if name == "pedestrian":
        curve = ped_curve
    else:
        curve = scale_curve(ped_curve, WHEELCHAIR_SPEEDS[name])
    return EntityProfile(name, BodyMap.from_shape(BUILTIN_SHAPES[name]),
                         curve.free_flow_speed, curve)
