"""CSV emission and grid snapshots (binary PPM and plain ASCII)."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import fields, is_dataclass
from pathlib import Path

import numpy as np

from .grid import OBSTACLE
from .metrics import DensitySpeedSample, RunSummary

# Free white, obstacles black; profiles cycle through this list in scenario order.
PALETTE = [
    (31, 119, 180),
    (214, 39, 40),
    (44, 160, 44),
    (255, 127, 14),
    (148, 103, 189),
    (140, 86, 75),
    (227, 119, 194),
    (23, 190, 207),
]
WHITE = (255, 255, 255)
BLACK = (0, 0, 0)


def _fmt(v):
    # repr() of a float round-trips exactly and always uses '.' as separator.
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_atomic(path, data: bytes):
    """Write ``data`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def summary_rows(summary: RunSummary, extra=None):
    rows = [
        ("mean_flow", summary.mean_flow),
        ("peak_flow_60s", summary.peak_flow_60s),
        ("crossings", summary.crossings),
    ]
    for name in sorted(summary.profile_counts):
        rows.append((f"crossings_{name}", summary.profile_counts[name]))
    rows += [("queue_mean", summary.queue_mean), ("queue_max", summary.queue_max)]
    for k, v in (extra or {}).items():
        rows.append((k, v))
    return rows


def emit_csv(data, path, header=None):
    """Write ``data`` as CSV with a header row and return the path.

    ``data`` may be a :class:`RunSummary` (written as metric,value pairs), a
    sequence of dataclass records such as :class:`DensitySpeedSample`, or a
    sequence of plain rows together with ``header``.
    """
    if isinstance(data, RunSummary):
        header = header or ["metric", "value"]
        rows = summary_rows(data)
    else:
        rows = list(data)
        if header is None:
            if rows and is_dataclass(rows[0]):
                header = [f.name for f in fields(rows[0])]
            elif not rows:
                header = [f.name for f in fields(DensitySpeedSample)]
            else:
                raise ValueError("header is required for plain rows")
        if rows and is_dataclass(rows[0]):
            rows = [[getattr(r, h) for h in header] for r in rows]
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_fmt(v) for v in r])
    write_atomic(path, buf.getvalue().encode("utf-8"))
    return Path(path)


def snapshot_pixels(sim) -> np.ndarray:
    """(rows, cols, 3) uint8 image of the occupancy lattice."""
    occ = sim.grid.occupancy
    img = np.empty(occ.shape + (3,), dtype=np.uint8)
    img[:] = WHITE
    img[occ == OBSTACLE] = BLACK
    agents = occ >= 0
    if agents.any():
        prof_of_cell = sim.prof[occ[agents]]
        colours = np.array([PALETTE[i % len(PALETTE)] for i in range(len(sim.profiles))],
                           dtype=np.uint8)
        img[agents] = colours[prof_of_cell]
    return img


def render_snapshot(sim, path):
    """Write a binary P6 pixmap with one pixel per cell; row 0 is the top line."""
    img = snapshot_pixels(sim)
    rows, cols = img.shape[:2]
    data = f"P6\n{cols} {rows}\n255\n".encode("ascii") + img.tobytes()
    write_atomic(path, data)
    return Path(path)


def read_ppm(path) -> np.ndarray:
    """Parse a P6 file written by :func:`render_snapshot`."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    cols, rows = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(rows, cols, 3)


def profile_glyphs(names) -> dict:
    """One character per profile: its first free letter, else a digit."""
    used = {".", "#"}
    out = {}
    for i, name in enumerate(names):
        glyph = next((ch for ch in name.lower() if ch.isalpha() and ch not in used), str(i % 10))
        used.add(glyph)
        out[name] = glyph
    return out


def ascii_snapshot(sim, stride: int = 1) -> str:
    """Terminal rendering: '.' free, '#' obstacle, one glyph per profile.

    ``stride`` > 1 keeps every stride-th cell in both axes.
    """
    occ = sim.grid.occupancy[::stride, ::stride]
    glyphs = profile_glyphs(sim.profile_names)
    table = np.array([glyphs[n] for n in sim.profile_names] or ["?"])
    chars = np.full(occ.shape, ".", dtype="<U1")
    chars[occ == OBSTACLE] = "#"
    agents = occ >= 0
    if agents.any():
        chars[agents] = table[sim.prof[occ[agents]]]
    legend = "  ".join(f"{g}={n}" for n, g in glyphs.items())
    lines = ["".join(r) for r in chars]
    return "\n".join(lines + [legend]) + "\n"
