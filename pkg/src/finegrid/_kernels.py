"""Numba kernels for the per-tick hot paths.

Internal module. Everything operates on flat arrays; agent attributes are
indexed by agent id. Random draws come from a ``numpy.random.Generator``
passed in by the caller, so one generator drives a whole run.
"""

import math

import numpy as np
from numba import njit

FREE = -1
SQRT2 = math.sqrt(2.0)
EPS = 1e-9

DR = np.array([0, 1, 1, 1, 0, -1, -1, -1], dtype=np.int64)
DC = np.array([1, 1, 0, -1, -1, -1, 0, 1], dtype=np.int64)
COST = np.array([1.0, SQRT2, 1.0, SQRT2, 1.0, SQRT2, 1.0, SQRT2])
HX = np.array([math.cos(math.radians(45 * k)) for k in range(8)])
HY = np.array([math.sin(math.radians(45 * k)) for k in range(8)])


@njit(cache=True)
def footprint_free_at(occ, r, c, dr, dc, n, ignore):
    rows, cols = occ.shape
    for k in range(n):
        rr = r + dr[k]
        cc = c + dc[k]
        if rr < 0 or rr >= rows or cc < 0 or cc >= cols:
            return False
        v = occ[rr, cc]
        if v != FREE and v != ignore:
            return False
    return True


@njit(cache=True)
def write_footprint(occ, r, c, dr, dc, n, value, expect):
    """Set cells to ``value``; returns False if any cell did not hold ``expect``."""
    ok = True
    for k in range(n):
        rr = r + dr[k]
        cc = c + dc[k]
        if occ[rr, cc] != expect:
            ok = False
        occ[rr, cc] = value
    return ok


@njit(cache=True)
def transition_scores(occ, dist, heading, r, c, agent_id, fp_dr, fp_dc, fp_n,
                      scores, target_free):
    """Fill ``scores`` with n_i / R_i per Moore neighbour and flag free targets.

    ``fp_*`` are one profile's body-map tables, indexed by direction. The body
    at a candidate cell faces that cell's descent ``heading``.
    """
    rows, cols = occ.shape
    for i in range(8):
        scores[i] = 0.0
        target_free[i] = False
        nr = r + DR[i]
        nc = c + DC[i]
        if nr < 0 or nr >= rows or nc < 0 or nc >= cols:
            continue
        d = dist[nr, nc]
        if not np.isfinite(d):
            continue
        h = heading[nr, nc]
        if not footprint_free_at(occ, nr, nc, fp_dr[h], fp_dc[h], fp_n[h], agent_id):
            continue
        if d == 0.0:
            target_free[i] = True
        else:
            scores[i] = 1.0 / d


@njit(cache=True)
def select_next_cell(scores, target_free, lam, rng):
    """Index of the chosen neighbour, or -1 to wait."""
    # A free neighbour inside the target wins outright.
    best = -1
    best_key = 0.0
    for i in range(8):
        if target_free[i]:
            key = COST[i] + rng.random() * 1e-3
            if best < 0 or key < best_key:
                best = i
                best_key = key
    if best >= 0:
        return best

    cand = np.empty(8, dtype=np.int64)
    tie = np.empty(8)
    m = 0
    for i in range(8):
        if scores[i] > 0.0:
            cand[m] = i
            tie[m] = rng.random()
            m += 1
    if m == 0:
        return -1
    # Insertion sort: score desc, then step cost asc, then random tie key.
    for a in range(1, m):
        ci = cand[a]
        ti = tie[a]
        b = a - 1
        while b >= 0:
            cb = cand[b]
            if scores[cb] > scores[ci]:
                break
            if scores[cb] == scores[ci]:
                if COST[cb] < COST[ci]:
                    break
                if COST[cb] == COST[ci] and tie[b] <= ti:
                    break
            cand[b + 1] = cand[b]
            tie[b + 1] = tie[b]
            b -= 1
        cand[b + 1] = ci
        tie[b + 1] = ti
    k = rng.poisson(lam)
    if k > m - 1:
        k = m - 1
    return cand[k]


@njit(cache=True)
def advance_agents(active, occ, dist, heading, target, fp_dr, fp_dc, fp_n,
                   row, col, dirn, prof, credit, speed, odo, alive,
                   tick_s, cell_m, lam, rng, exited):
    """Move every active agent for one tick in shuffled order.

    Ids of agents that reached the target are written to ``exited``. Returns
    the number of exits, or ``-(id + 1)`` on an occupancy violation.
    """
    order = active.copy()
    rng.shuffle(order)
    scores = np.empty(8)
    target_free = np.empty(8, dtype=np.bool_)
    n_exit = 0
    for a in order:
        if not alive[a]:
            continue
        p = prof[a]
        credit[a] += speed[a] * tick_s
        while credit[a] >= 1.0 - EPS:
            r = row[a]
            c = col[a]
            transition_scores(occ, dist, heading, r, c, a, fp_dr[p], fp_dc[p], fp_n[p],
                              scores, target_free)
            k = select_next_cell(scores, target_free, lam, rng)
            if k < 0:
                if credit[a] > 1.0:
                    credit[a] = 1.0
                break
            cost = COST[k]
            if credit[a] < cost - EPS:
                break
            credit[a] = max(credit[a] - cost, 0.0)
            d0 = dirn[a]
            write_footprint(occ, r, c, fp_dr[p, d0], fp_dc[p, d0], fp_n[p, d0], FREE, a)
            nr = r + DR[k]
            nc = c + DC[k]
            h = heading[nr, nc]
            if not write_footprint(occ, nr, nc, fp_dr[p, h], fp_dc[p, h], fp_n[p, h], a, FREE):
                return -(a + 1)
            row[a] = nr
            col[a] = nc
            dirn[a] = h
            odo[a] += cost * cell_m
            if target[nr, nc]:
                write_footprint(occ, nr, nc, fp_dr[p, h], fp_dc[p, h], fp_n[p, h], FREE, a)
                alive[a] = False
                exited[n_exit] = a
                n_exit += 1
                break
    return n_exit


@njit(cache=True)
def _clip(xs, ys, n, axis, bound, keep_above):
    ox = np.empty(n * 2 + 2)
    oy = np.empty(n * 2 + 2)
    m = 0
    for i in range(n):
        j = (i + 1) % n
        pi = xs[i] if axis == 0 else ys[i]
        pj = xs[j] if axis == 0 else ys[j]
        ini = pi >= bound if keep_above else pi <= bound
        inj = pj >= bound if keep_above else pj <= bound
        if ini:
            ox[m] = xs[i]
            oy[m] = ys[i]
            m += 1
        if ini != inj:
            t = (bound - pi) / (pj - pi)
            ox[m] = xs[i] + t * (xs[j] - xs[i])
            oy[m] = ys[i] + t * (ys[j] - ys[i])
            m += 1
    return ox, oy, m


@njit(cache=True)
def clipped_rect_area(x0, y0, hx, hy, near, far, half_w, width, height):
    """Area of the heading-aligned rectangle ahead of (x0, y0) inside the box."""
    nx = -hy
    ny = hx
    xs = np.empty(4)
    ys = np.empty(4)
    xs[0] = x0 + near * hx - half_w * nx
    ys[0] = y0 + near * hy - half_w * ny
    xs[1] = x0 + far * hx - half_w * nx
    ys[1] = y0 + far * hy - half_w * ny
    xs[2] = x0 + far * hx + half_w * nx
    ys[2] = y0 + far * hy + half_w * ny
    xs[3] = x0 + near * hx + half_w * nx
    ys[3] = y0 + near * hy + half_w * ny
    n = 4
    xs, ys, n = _clip(xs, ys, n, 0, 0.0, True)
    if n > 0:
        xs, ys, n = _clip(xs, ys, n, 0, width, False)
    if n > 0:
        xs, ys, n = _clip(xs, ys, n, 1, 0.0, True)
    if n > 0:
        xs, ys, n = _clip(xs, ys, n, 1, height, False)
    area = 0.0
    for i in range(n):
        j = (i + 1) % n
        area += xs[i] * ys[j] - xs[j] * ys[i]
    return abs(area) / 2.0


@njit(cache=True)
def perceive(ids, active, row, col, heading, prof, front_m, half_w_m, depth_m,
             width_m, height_m, cell_m, min_area, out):
    """Perceived density ahead of each agent in ``ids`` (others from ``active``).

    The look-ahead rectangle follows the per-cell ``heading`` map, not the
    direction of the agent's last step.
    """
    for t in range(len(ids)):
        a = ids[t]
        p = prof[a]
        h = heading[row[a], col[a]]
        hx = HX[h]
        hy = HY[h]
        x0 = col[a] * cell_m
        y0 = row[a] * cell_m
        near = front_m[p]
        far = near + depth_m
        hw = half_w_m[p]
        count = 0
        for b in active:
            if b == a:
                continue
            dx = col[b] * cell_m - x0
            dy = row[b] * cell_m - y0
            along = dx * hx + dy * hy
            if along < near - EPS or along > far + EPS:
                continue
            across = -dx * hy + dy * hx
            if abs(across) <= hw + EPS:
                count += 1
        area = clipped_rect_area(x0, y0, hx, hy, near, far, hw, width_m, height_m)
        if area < min_area:
            area = min_area
        out[t] = count / area


@njit(cache=True)
def adapt_speeds(ids, prof, density, cur_rho, cur_v, cur_n, stall, cell_m, max_cells, speed):
    for t in range(len(ids)):
        a = ids[t]
        p = prof[a]
        rho = density[a]
        if rho >= stall[p]:
            v = 0.0
        else:
            n = cur_n[p]
            v = np.interp(rho, cur_rho[p, :n], cur_v[p, :n])
        cells = int(math.floor(v / cell_m + 0.5))
        if cells < 0:
            cells = 0
        if cells > max_cells:
            cells = max_cells
        speed[a] = cells


@njit(cache=True)
def find_free_center(occ, r0, r1, c0, c1, dr, dc, n, rng):
    """Uniformly random centre in the strip whose footprint is free, or (-1, -1)."""
    w = c1 - c0
    m = (r1 - r0) * w
    if m <= 0:
        return -1, -1
    perm = rng.permutation(m)
    for idx in perm:
        r = r0 + idx // w
        c = c0 + idx % w
        if footprint_free_at(occ, r, c, dr, dc, n, -1):
            return r, c
    return -1, -1
