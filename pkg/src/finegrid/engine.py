"""Tick-driven simulation core.

A :class:`Simulation` owns the grid, the agent table (struct-of-arrays keyed
by agent id), the spawn queues and the metric recorders. Each tick:

1. arrivals are drawn and queued agents are placed in their source strip,
2. perceived densities (and hence desired speeds) are refreshed every
   ``density_refresh_ticks`` ticks,
3. every agent spends its movement credit on neighbour steps chosen by the
   transition score / Poisson rank rule,
4. flow-line crossings, exits and density-speed samples are recorded.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import ConfigError, InvariantViolation
from .grid import (
    CELL_SIZE_M,
    DIRECTIONS,
    FREE,
    STEP_COST,
    DistanceField,
    Grid,
    _rect_to_slices,
    audit_occupancy,
    compute_distance_field,
)
from .metrics import FlowLine, RunMetrics, record_crossing, sample_density_speed
from .profiles import MAX_SPEED_CELLS, EntityProfile, lookup_speed

TICK_S = 0.025


@dataclass
class EngineConfig:
    tick_s: float = TICK_S
    lam: float = 0.05
    perception_depth_m: float = 2.0
    # None: each profile uses its own footprint half-width + 0.5 m.
    perception_halfwidth_m: float | None = None
    density_refresh_ticks: int = 10
    rng_seed: int = 0
    duration_s: float = 1500.0
    warmup_s: float = 100.0
    audit_every_ticks: int = 100
    sample_every_s: float = 1.0
    min_perception_area_m2: float = 0.25

    def __post_init__(self):
        if self.tick_s != TICK_S:
            raise ConfigError(f"tick must be {TICK_S} s", key="tick_s")
        if not 0 < self.lam < 0.1:
            raise ConfigError(f"lambda must satisfy 0 < lambda < 0.1, got {self.lam}",
                              key="lambda")
        if not self.perception_depth_m > 0:
            raise ConfigError("must be positive", key="perception_depth_m")
        if self.perception_halfwidth_m is not None and not self.perception_halfwidth_m > 0:
            raise ConfigError("must be positive", key="perception_halfwidth_m")
        if int(self.density_refresh_ticks) < 1:
            raise ConfigError("must be >= 1", key="density_refresh_ticks")
        if self.duration_s < 0 or self.warmup_s < 0:
            raise ConfigError("durations must be non-negative", key="duration_s")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration_s / self.tick_s))


@dataclass
class SourceSpec:
    """Poisson inflow into a rectangular strip ``(x0, y0, x1, y1)`` in meters."""

    strip: tuple
    arrival_rate: float
    mixture: dict

    def __post_init__(self):
        if self.arrival_rate < 0:
            raise ConfigError("arrival rate must be >= 0", key="source.rate")
        if not self.mixture:
            raise ConfigError("mixture is empty", key="source.mixture")
        ratios = np.array(list(self.mixture.values()), dtype=float)
        if np.any(ratios < 0) or np.any(ratios > 1):
            raise ConfigError("mixture ratios must lie in [0, 1]", key="source.mixture")
        if abs(ratios.sum() - 1.0) > 1e-9:
            raise ConfigError(f"mixture ratios sum to {ratios.sum():g}, not 1",
                              key="source.mixture")


@dataclass
class Scenario:
    grid: Grid
    target_name: str
    profiles: dict
    sources: list
    flow_line: FlowLine | None = None


@dataclass
class Agent:
    """Read-only snapshot of one agent's state."""

    id: int
    profile: EntityProfile
    center: tuple
    direction: int
    target_name: str
    desired_speed_cells: int
    move_credit: float
    spawn_time: float
    exit_time: float | None
    perceived_density: float


def descent_directions(field: DistanceField) -> np.ndarray:
    """Per-cell direction of steepest distance decrease per unit step length.

    Straight directions win exact ties; cells with no finite neighbour get 0.
    """
    dist = field.dist
    rows, cols = dist.shape
    padded = np.full((rows + 2, cols + 2), np.inf)
    padded[1:-1, 1:-1] = dist
    here = np.where(np.isfinite(dist), dist, 0.0)
    best = np.zeros((rows, cols), dtype=np.int64)
    best_drop = np.full((rows, cols), -np.inf)
    for k in (0, 2, 4, 6, 1, 3, 5, 7):
        dr, dc = DIRECTIONS[k]
        nb = padded[1 + dr : 1 + dr + rows, 1 + dc : 1 + dc + cols]
        drop = np.where(np.isfinite(nb), (here - nb) / STEP_COST[k], -np.inf)
        better = drop > best_drop + 1e-12
        best[better] = k
        best_drop[better] = drop[better]
    return best


def descent_direction(field: DistanceField, row, col) -> int:
    return int(descent_directions(field)[row, col])


class Simulation:
    def __init__(self, scenario: Scenario, config: EngineConfig | None = None, rng=None):
        self.scenario = scenario
        self.config = config or EngineConfig()
        self.rng = rng if rng is not None else np.random.default_rng(self.config.rng_seed)
        self.grid = scenario.grid
        self.field = compute_distance_field(self.grid, scenario.target_name)
        self.target = np.ascontiguousarray(self.grid.target_mask(scenario.target_name))
        self.heading = descent_directions(self.field)

        self.profile_names = list(scenario.profiles)
        self.profiles = [scenario.profiles[n] for n in self.profile_names]
        self._profile_index = {n: i for i, n in enumerate(self.profile_names)}
        self._build_profile_tables()

        self.sources = list(scenario.sources)
        for s in self.sources:
            for name in s.mixture:
                if name not in self._profile_index:
                    raise ConfigError(f"unknown profile {name!r}", key="source.mixture")
        self._strips = [self._strip_cells(s.strip) for s in self.sources]
        # Sources face the steepest descent at their strip centre.
        self._spawn_dirs = [
            int(self.heading[(r0 + r1) // 2, (c0 + c1) // 2])
            for r0, r1, c0, c1 in self._strips
        ]
        self._mix = [
            (np.array([self._profile_index[n] for n in s.mixture], dtype=np.int64),
             np.array(list(s.mixture.values()), dtype=float))
            for s in self.sources
        ]
        self.queues = [deque() for _ in self.sources]

        self.tick = 0
        self.arrivals = 0
        self.exited = 0
        self._alloc(256)
        self.next_id = 0
        self.active = np.empty(0, dtype=np.int64)
        self._exit_buf = np.empty(256, dtype=np.int64)

        self.flow_line = scenario.flow_line
        self.metrics = RunMetrics(flow_line=self.flow_line)
        self._sample_every = max(1, int(round(self.config.sample_every_s / self.config.tick_s)))

    # -- setup ---------------------------------------------------------------

    def _build_profile_tables(self):
        P = len(self.profiles)
        kmax = max(len(o) for p in self.profiles for o in p.body_map.offsets)
        self.fp_dr = np.zeros((P, 8, kmax), dtype=np.int64)
        self.fp_dc = np.zeros((P, 8, kmax), dtype=np.int64)
        self.fp_n = np.zeros((P, 8), dtype=np.int64)
        nmax = max(len(p.curve.densities) for p in self.profiles)
        self.cur_rho = np.zeros((P, nmax))
        self.cur_v = np.zeros((P, nmax))
        self.cur_n = np.zeros(P, dtype=np.int64)
        self.stall = np.zeros(P)
        self.front_m = np.zeros(P)
        self.half_w_m = np.zeros(P)
        for i, prof in enumerate(self.profiles):
            for d, off in enumerate(prof.body_map.offsets):
                self.fp_dr[i, d, : len(off)] = off[:, 0]
                self.fp_dc[i, d, : len(off)] = off[:, 1]
                self.fp_n[i, d] = len(off)
            n = len(prof.curve.densities)
            self.cur_rho[i, :n] = prof.curve.densities
            self.cur_v[i, :n] = prof.curve.speeds
            self.cur_n[i] = n
            self.stall[i] = prof.curve.stall_density
            self.front_m[i] = prof.shape.length_m / 2
            hw = self.config.perception_halfwidth_m
            self.half_w_m[i] = hw if hw is not None else prof.shape.width_m / 2 + 0.5

    def _strip_cells(self, strip):
        rs, cs = _rect_to_slices(strip, self.grid.rows, self.grid.cols, key="source.strip")
        return rs.start, rs.stop, cs.start, cs.stop

    def _alloc(self, n):
        old = getattr(self, "row", None)
        fields = {
            "row": np.int64, "col": np.int64, "dirn": np.int64, "prof": np.int64,
            "speed": np.int64, "credit": np.float64, "odo": np.float64,
            "density": np.float64, "alive": np.bool_, "spawn_time": np.float64,
            "exit_time": np.float64, "odo_mark": np.float64, "mark_time": np.float64,
        }
        for name, dtype in fields.items():
            arr = np.zeros(n, dtype=dtype)
            if name == "exit_time":
                arr[:] = np.nan
            if old is not None:
                prev = getattr(self, name)
                arr[: len(prev)] = prev
            setattr(self, name, arr)

    # -- state queries -------------------------------------------------------

    @property
    def time(self) -> float:
        return self.tick * self.config.tick_s

    @property
    def queued(self) -> int:
        return sum(len(q) for q in self.queues)

    def profile_of(self, agent_id) -> EntityProfile:
        return self.profiles[self.prof[agent_id]]

    def footprint(self, agent_id) -> np.ndarray:
        p, d = self.prof[agent_id], self.dirn[agent_id]
        n = self.fp_n[p, d]
        return np.column_stack([self.fp_dr[p, d, :n] + self.row[agent_id],
                                self.fp_dc[p, d, :n] + self.col[agent_id]])

    def position_m(self, agent_id):
        return self.col[agent_id] * CELL_SIZE_M, self.row[agent_id] * CELL_SIZE_M

    def agent(self, agent_id) -> Agent:
        if not 0 <= agent_id < self.next_id:
            raise KeyError(agent_id)
        exit_t = self.exit_time[agent_id]
        return Agent(
            id=int(agent_id),
            profile=self.profile_of(agent_id),
            center=(int(self.row[agent_id]), int(self.col[agent_id])),
            direction=int(self.dirn[agent_id]),
            target_name=self.scenario.target_name,
            desired_speed_cells=int(self.speed[agent_id]),
            move_credit=float(self.credit[agent_id]),
            spawn_time=float(self.spawn_time[agent_id]),
            exit_time=None if np.isnan(exit_t) else float(exit_t),
            perceived_density=float(self.density[agent_id]),
        )

    # -- agent placement -----------------------------------------------------

    def add_agent(self, profile_name, row, col, direction=None, speed_cells=None) -> int:
        """Place an agent directly; raises InvariantViolation if the footprint is not free.

        A direct placement counts as an arrival for the conservation audit.
        """
        a = self._place(profile_name, row, col, direction, speed_cells)
        self.arrivals += 1
        return a

    def _place(self, profile_name, row, col, direction=None, speed_cells=None) -> int:
        p = self._profile_index[profile_name]
        if direction is None:
            direction = int(self.heading[row, col])
        n = self.fp_n[p, direction]
        dr, dc = self.fp_dr[p, direction, :n], self.fp_dc[p, direction, :n]
        if not K.footprint_free_at(self.grid.occupancy, row, col, dr, dc, n, -1):
            raise InvariantViolation(f"cannot place {profile_name} at ({row}, {col})")
        a = self.next_id
        if a >= len(self.row):
            self._alloc(2 * len(self.row))
        self.next_id += 1
        K.write_footprint(self.grid.occupancy, row, col, dr, dc, n, a, FREE)
        self.row[a], self.col[a], self.dirn[a], self.prof[a] = row, col, direction, p
        self.credit[a] = 0.0
        self.odo[a] = 0.0
        self.alive[a] = True
        self.spawn_time[a] = self.time
        self.odo_mark[a] = 0.0
        self.mark_time[a] = self.time
        self.active = np.append(self.active, a)
        ids = np.array([a], dtype=np.int64)
        if speed_cells is None:
            self._refresh(ids)
        else:
            self.speed[a] = speed_cells
        return a

    def spawn(self, source_index: int = 0) -> int:
        """Draw this tick's arrivals for one source, then place queued agents FIFO."""
        src = self.sources[source_index]
        queue = self.queues[source_index]
        n_new = self.rng.poisson(src.arrival_rate * self.config.tick_s) if src.arrival_rate else 0
        if n_new:
            idx, weights = self._mix[source_index]
            for p in self.rng.choice(idx, size=n_new, p=weights):
                queue.append((int(p), self.time))
            self.arrivals += n_new
        placed = 0
        r0, r1, c0, c1 = self._strips[source_index]
        while queue:
            p, _ = queue[0]
            d = self._spawn_dirs[source_index]
            n = self.fp_n[p, d]
            r, c = K.find_free_center(self.grid.occupancy, r0, r1, c0, c1,
                                      self.fp_dr[p, d, :n], self.fp_dc[p, d, :n], n, self.rng)
            if r < 0:
                break
            queue.popleft()
            self._place(self.profile_names[p], int(r), int(c), direction=d)
            placed += 1
        return placed

    # -- per-tick work -------------------------------------------------------

    def _refresh(self, ids):
        if len(ids) == 0:
            return
        out = np.empty(len(ids))
        K.perceive(ids, self.active, self.row, self.col, self.heading, self.prof,
                   self.front_m, self.half_w_m, self.config.perception_depth_m,
                   self.grid.width_m, self.grid.height_m, CELL_SIZE_M,
                   self.config.min_perception_area_m2, out)
        self.density[ids] = out
        K.adapt_speeds(ids, self.prof, self.density, self.cur_rho, self.cur_v, self.cur_n,
                       self.stall, CELL_SIZE_M, MAX_SPEED_CELLS, self.speed)

    def step(self):
        cfg = self.config
        for i in range(len(self.sources)):
            self.spawn(i)
        if self.tick and self.tick % cfg.density_refresh_ticks == 0:
            self._refresh(self.active)

        active = self.active
        x_before = self.col[active] * CELL_SIZE_M
        if len(self._exit_buf) < len(active):
            self._exit_buf = np.empty(2 * len(active), dtype=np.int64)
        n_exit = K.advance_agents(
            active, self.grid.occupancy, self.field.dist, self.heading, self.target,
            self.fp_dr, self.fp_dc, self.fp_n,
            self.row, self.col, self.dirn, self.prof, self.credit, self.speed,
            self.odo, self.alive, cfg.tick_s, CELL_SIZE_M, cfg.lam, self.rng, self._exit_buf,
        )
        if n_exit < 0:
            bad = -n_exit - 1
            raise InvariantViolation(
                f"tick {self.tick}: agent {bad} moved onto an occupied cell",
                dump=self.dump(),
            )
        self.tick += 1
        now = self.time

        if self.flow_line is not None and len(active):
            x_after = self.col[active] * CELL_SIZE_M
            line = self.flow_line.position_m
            crossed = np.flatnonzero((x_before < line) & (x_after >= line))
            for j in crossed:
                a = active[j]
                record_crossing(self.flow_line, a, self.profile_names[self.prof[a]], now)

        if n_exit:
            gone = self._exit_buf[:n_exit]
            self.exit_time[gone] = now
            self.exited += n_exit
            self.active = active[self.alive[active]]

        if self.tick % self._sample_every == 0 and now > cfg.warmup_s + 1e-9:
            self.metrics.samples.extend(sample_density_speed(self))
            ids = self.active
            self.odo_mark[ids] = self.odo[ids]
            self.mark_time[ids] = now
            self.metrics.queue_lengths.append(self.queued)

        if cfg.audit_every_ticks and self.tick % cfg.audit_every_ticks == 0:
            self.audit()

    def run_ticks(self, n):
        for _ in range(n):
            self.step()

    # -- invariants ----------------------------------------------------------

    def audit(self):
        problems = audit_occupancy(self.grid, {int(a): self.footprint(a) for a in self.active})
        present = len(self.active)
        if self.arrivals != self.exited + present + self.queued:
            problems.append(
                f"conservation: arrivals {self.arrivals} != exited {self.exited} "
                f"+ present {present} + queued {self.queued}"
            )
        if len(self.active) and np.any(self.credit[self.active] >= 1 + math.sqrt(2)):
            problems.append("movement credit above bound")
        self.metrics.audits += 1
        if problems:
            raise InvariantViolation(f"tick {self.tick}: " + "; ".join(problems), dump=self.dump())

    def dump(self) -> dict:
        ids = self.active
        return {
            "tick": self.tick,
            "time_s": self.time,
            "arrivals": self.arrivals,
            "exited": self.exited,
            "queued": self.queued,
            "agents": [
                {"id": int(a), "profile": self.profile_names[self.prof[a]],
                 "row": int(self.row[a]), "col": int(self.col[a]), "dir": int(self.dirn[a]),
                 "speed_cells": int(self.speed[a]), "credit": float(self.credit[a])}
                for a in ids
            ],
        }


# -- functional surface --------------------------------------------------------


def transition_scores(sim: Simulation, agent_id: int):
    """Return (scores, target_free) for the agent's 8 Moore neighbours."""
    if not (0 <= agent_id < sim.next_id and sim.alive[agent_id]):
        raise InvariantViolation(f"agent {agent_id} is not on the grid")
    p = sim.prof[agent_id]
    scores = np.empty(8)
    target_free = np.empty(8, dtype=np.bool_)
    K.transition_scores(sim.grid.occupancy, sim.field.dist, sim.heading, sim.row[agent_id],
                        sim.col[agent_id], agent_id, sim.fp_dr[p], sim.fp_dc[p], sim.fp_n[p],
                        scores, target_free)
    return scores, target_free


def select_next_cell(scores, target_free, rng, lam=0.05):
    """Chosen neighbour index (see ``grid.DIRECTIONS``) or ``None`` to wait."""
    k = K.select_next_cell(np.asarray(scores, dtype=float),
                           np.asarray(target_free, dtype=np.bool_), lam, rng)
    return None if k < 0 else int(k)


def perceive_density(sim: Simulation, agent_id: int) -> float:
    out = np.empty(1)
    p = sim.prof
    K.perceive(np.array([agent_id], dtype=np.int64), sim.active, sim.row, sim.col, sim.heading, p,
               sim.front_m, sim.half_w_m, sim.config.perception_depth_m, sim.grid.width_m,
               sim.grid.height_m, CELL_SIZE_M, sim.config.min_perception_area_m2, out)
    return float(out[0])


def adapt_speed(curve, density) -> int:
    v = lookup_speed(curve, density)
    return int(min(max(math.floor(v / CELL_SIZE_M + 0.5), 0), MAX_SPEED_CELLS))


def step_tick(sim: Simulation) -> Simulation:
    sim.step()
    return sim


def spawn_agents(sim: Simulation, source_index: int = 0) -> int:
    return sim.spawn(source_index)


def run(scenario: Scenario, config: EngineConfig | None = None) -> RunMetrics:
    sim = Simulation(scenario, config)
    sim.run_ticks(sim.config.n_ticks)
    m = sim.metrics
    m.arrivals, m.exited, m.present, m.queued = sim.arrivals, sim.exited, len(sim.active), sim.queued
    m.duration_s, m.warmup_s = sim.config.duration_s, sim.config.warmup_s
    return m
