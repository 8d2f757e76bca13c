"""
Looking at a jam
================

Snapshots show where entities sit on the lattice. PPM images colour each
profile; the ASCII view is handy in a terminal.
"""

# %%
import os

from finegrid import Simulation
from finegrid.output import ascii_snapshot, render_snapshot
from finegrid.scenario import config_from_dict

OUT = os.environ.get("FINEGRID_NOTEBOOK_OUT", os.path.join(os.path.dirname(__file__), "_out"))
os.makedirs(OUT, exist_ok=True)

cfg = config_from_dict({"seed": 4, "source": {
    "rate": 6.0, "mixture": {"pedestrian": 0.8, "nonassisted_wheelchair": 0.2}}})
sim = Simulation(*cfg.build())
sim.run_ticks(int(30 / sim.config.tick_s))

# %%
# Every 4th cell in each axis: 15 rows by 100 columns.
print(ascii_snapshot(sim, stride=4))
print("image written to", render_snapshot(sim, os.path.join(OUT, "jam.ppm")))
