"""Discrete space: occupancy lattice, obstacles, target regions, distance fields.

Cells are 5 cm squares. ``occupancy`` holds one int32 per cell: ``FREE`` (-1),
``OBSTACLE`` (-2), or the id of the agent covering it. Metric coordinates use
x along columns and y along rows, origin at the top-left corner of cell (0, 0).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvariantViolation

CELL_SIZE_M = 0.05
FREE = -1
OBSTACLE = -2
SQRT2 = math.sqrt(2.0)
UNREACHABLE = np.inf

# Moore directions as (drow, dcol), clockwise from East in the y-down frame.
# Even indices are straight steps, odd indices diagonal.
DIRECTIONS = np.array(
    [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)],
    dtype=np.int64,
)
DIRECTION_NAMES = ("E", "SE", "S", "SW", "W", "NW", "N", "NE")
STEP_COST = np.array([1.0 if k % 2 == 0 else SQRT2 for k in range(8)])

_EPS = 1e-9


@dataclass(frozen=True)
class GridIndex:
    row: int
    col: int


@dataclass
class Grid:
    rows: int
    cols: int
    occupancy: np.ndarray
    target_regions: dict[str, np.ndarray] = field(default_factory=dict)
    cell_size_m: float = CELL_SIZE_M
    obstacle: np.ndarray = None

    def __post_init__(self):
        if self.obstacle is None:
            self.obstacle = self.occupancy == OBSTACLE

    @property
    def width_m(self) -> float:
        return self.cols * self.cell_size_m

    @property
    def height_m(self) -> float:
        return self.rows * self.cell_size_m

    def in_bounds(self, row, col) -> bool:
        return 0 <= row < self.rows and 0 <= col < self.cols

    def target_mask(self, name: str) -> np.ndarray:
        try:
            return self.target_regions[name]
        except KeyError:
            raise ConfigError(f"unknown target region {name!r}", key="target") from None

    def agent_cells(self, agent_id: int) -> np.ndarray:
        return np.argwhere(self.occupancy == agent_id)

    def copy(self) -> "Grid":
        return Grid(
            self.rows,
            self.cols,
            self.occupancy.copy(),
            {k: v.copy() for k, v in self.target_regions.items()},
            obstacle=self.obstacle.copy(),
        )


@dataclass
class DistanceField:
    """Shortest 8-connected path length (in cells) from every cell to a target.

    ``straight`` and ``diagonal`` hold the step counts of one optimal path, so
    ``dist == straight + diagonal * sqrt(2)`` exactly; unreachable and obstacle
    cells hold ``inf`` (counts -1).
    """

    target_name: str
    dist: np.ndarray
    straight: np.ndarray
    diagonal: np.ndarray

    def __getitem__(self, idx):
        return self.dist[idx]


def _rect_to_slices(rect, grid_rows, grid_cols, key):
    x0, y0, x1, y1 = (float(v) for v in rect)
    if not (x1 > x0 and y1 > y0):
        raise ConfigError(f"degenerate rectangle {rect!r}", key=key)
    width_m = grid_cols * CELL_SIZE_M
    height_m = grid_rows * CELL_SIZE_M
    if x0 < -_EPS or y0 < -_EPS or x1 > width_m + _EPS or y1 > height_m + _EPS:
        raise ConfigError(
            f"rectangle {rect!r} outside grid bounds {width_m:g} x {height_m:g} m", key=key
        )
    c0 = int(math.floor(x0 / CELL_SIZE_M + _EPS))
    c1 = int(math.ceil(x1 / CELL_SIZE_M - _EPS))
    r0 = int(math.floor(y0 / CELL_SIZE_M + _EPS))
    r1 = int(math.ceil(y1 / CELL_SIZE_M - _EPS))
    return slice(r0, r1), slice(c0, c1)


def build_grid(width_m, height_m, obstacles=(), targets=None) -> Grid:
    """Build a lattice covering ``width_m`` (x, columns) by ``height_m`` (y, rows).

    Rectangles are ``(x0, y0, x1, y1)`` in meters. Any cell touched by a
    rectangle belongs to it.
    """
    if not (width_m > 0 and height_m > 0):
        raise ConfigError("grid dimensions must be positive", key="width_m/height_m")
    cols = int(math.ceil(width_m / CELL_SIZE_M - _EPS))
    rows = int(math.ceil(height_m / CELL_SIZE_M - _EPS))
    occupancy = np.full((rows, cols), FREE, dtype=np.int32)
    for i, rect in enumerate(obstacles):
        rs, cs = _rect_to_slices(rect, rows, cols, key=f"obstacles[{i}]")
        occupancy[rs, cs] = OBSTACLE

    regions = {}
    for name, rect in (targets or {}).items():
        rs, cs = _rect_to_slices(rect, rows, cols, key=f"targets.{name}")
        mask = np.zeros((rows, cols), dtype=bool)
        mask[rs, cs] = True
        if np.any(occupancy[mask] == OBSTACLE):
            raise ConfigError("target region overlaps an obstacle", key=f"targets.{name}")
        regions[name] = mask
    return Grid(rows, cols, occupancy, regions)


def compute_distance_field(grid: Grid, target_name: str) -> DistanceField:
    """Dijkstra from all target cells over non-obstacle cells (costs 1 and sqrt 2)."""
    mask = grid.target_mask(target_name)
    if not mask.any():
        raise ConfigError(f"target region {target_name!r} is empty", key="target")

    rows, cols = grid.rows, grid.cols
    blocked = grid.obstacle
    dist = np.full((rows, cols), UNREACHABLE)
    straight = np.full((rows, cols), -1, dtype=np.int64)
    diagonal = np.full((rows, cols), -1, dtype=np.int64)

    heap = []
    for r, c in np.argwhere(mask):
        dist[r, c] = 0.0
        straight[r, c] = 0
        diagonal[r, c] = 0
        heap.append((0.0, int(r), int(c)))
    heapq.heapify(heap)

    moves = [(int(dr), int(dc), k % 2) for k, (dr, dc) in enumerate(DIRECTIONS)]
    while heap:
        d, r, c = heapq.heappop(heap)
        if d > dist[r, c]:
            continue
        a, b = straight[r, c], diagonal[r, c]
        for dr, dc, is_diag in moves:
            nr, nc = r + dr, c + dc
            if nr < 0 or nr >= rows or nc < 0 or nc >= cols or blocked[nr, nc]:
                continue
            na, nb = (a, b + 1) if is_diag else (a + 1, b)
            nd = na + nb * SQRT2
            if nd < dist[nr, nc]:
                dist[nr, nc] = nd
                straight[nr, nc] = na
                diagonal[nr, nc] = nb
                heapq.heappush(heap, (nd, nr, nc))
    return DistanceField(target_name, dist, straight, diagonal)


def footprint_free(grid: Grid, cells, ignore_agent=None) -> bool:
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
    r, c = cells[:, 0], cells[:, 1]
    if np.any((r < 0) | (r >= grid.rows) | (c < 0) | (c >= grid.cols)):
        return False
    occ = grid.occupancy[r, c]
    ok = occ == FREE
    if ignore_agent is not None:
        ok |= occ == ignore_agent
    return bool(ok.all())


def place_footprint(grid: Grid, agent_id: int, cells) -> None:
    if agent_id < 0:
        raise InvariantViolation(f"invalid agent id {agent_id}")
    if not footprint_free(grid, cells, agent_id):
        raise InvariantViolation(
            f"agent {agent_id}: footprint overlaps an obstacle, the boundary or another agent"
        )
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
    grid.occupancy[cells[:, 0], cells[:, 1]] = agent_id


def remove_footprint(grid: Grid, agent_id: int) -> None:
    hit = grid.occupancy == agent_id
    if agent_id < 0 or not hit.any():
        raise InvariantViolation(f"agent {agent_id} is not on the grid")
    grid.occupancy[hit] = FREE


def audit_occupancy(grid: Grid, footprints: dict) -> list[str]:
    """Compare the lattice against the expected footprint of every live agent.

    ``footprints`` maps agent id to an (n, 2) array of absolute cells. Returns
    a list of human-readable problems (empty when consistent).
    """
    problems = []
    occ = grid.occupancy
    if np.any(occ[grid.obstacle] != OBSTACLE):
        problems.append("obstacle cells overwritten")
    expected_total = 0
    for agent_id, cells in footprints.items():
        cells = np.asarray(cells).reshape(-1, 2)
        expected_total += len(cells)
        got = occ[cells[:, 0], cells[:, 1]]
        bad = int(np.count_nonzero(got != agent_id))
        if bad:
            problems.append(f"agent {agent_id}: {bad} footprint cells not owned")
    owned = int(np.count_nonzero(occ >= 0))
    if owned != expected_total:
        problems.append(f"{owned} owned cells on grid, {expected_total} expected")
    return problems
