"""
Distance fields and body maps
=============================

Agents walk down a precomputed distance field and occupy many 5 cm cells
at once. This script builds a small room with a wall, prints the field and
draws the eight body-map variants of a non-assisted wheelchair.
"""

# %%
# A 2 m x 1 m room with a wall and a gap; the exit is the right edge.
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from finegrid import build_grid, builtin_profile, compute_distance_field

OUT = os.environ.get("FINEGRID_NOTEBOOK_OUT", os.path.join(os.path.dirname(__file__), "_out"))
os.makedirs(OUT, exist_ok=True)

grid = build_grid(2.0, 1.0, obstacles=[(1.0, 0.0, 1.05, 0.7)], targets={"exit": (1.95, 0.0, 2.0, 1.0)})
field = compute_distance_field(grid, "exit")
print(grid.rows, "rows x", grid.cols, "cols")

# %%
# Distances are exact sums a + b*sqrt(2) of straight and diagonal steps.
r, c = 5, 0
print("cell", (r, c), "distance", field.dist[r, c], "=",
      field.straight[r, c], "+", field.diagonal[r, c], "* sqrt(2)")

fig, ax = plt.subplots(figsize=(8, 4))
shown = np.where(np.isfinite(field.dist), field.dist, np.nan)
im = ax.imshow(shown, origin="lower", cmap="viridis")
fig.colorbar(im, ax=ax, label="cells to exit")
ax.set_title("distance field around a wall")
fig.savefig(os.path.join(OUT, "distance_field.png"), dpi=100)

# %%
# Each profile has one footprint per Moore direction (E, NE, N, ...).
wheelchair = builtin_profile("nonassisted_wheelchair")
print("footprint sizes by direction:", wheelchair.body_map.sizes)

fig, axes = plt.subplots(2, 4, figsize=(10, 5))
for d, ax in enumerate(axes.flat):
    cells = wheelchair.body_map.offsets[d]
    ax.scatter(cells[:, 1], cells[:, 0], s=4, marker="s")
    ax.scatter([0], [0], c="red", s=10)
    ax.set_aspect("equal")
    ax.set_title(f"direction {d}: {len(cells)} cells")
    ax.set_xlim(-16, 16)
    ax.set_ylim(-16, 16)
fig.tight_layout()
fig.savefig(os.path.join(OUT, "body_maps.png"), dpi=100)
