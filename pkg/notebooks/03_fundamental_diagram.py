"""
Density and speed with 5% wheelchairs
=====================================

Each agent perceives the density ahead of it and walks at the speed its
density-speed curve gives. Binning the realized speeds by perceived density
recovers a fundamental diagram to compare with the Weidmann curve.
"""

# %%
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from finegrid import builtin_curve, lookup_speed, run, summarize_run
from finegrid.metrics import weidmann_reference
from finegrid.scenario import config_from_dict

OUT = os.environ.get("FINEGRID_NOTEBOOK_OUT", os.path.join(os.path.dirname(__file__), "_out"))
os.makedirs(OUT, exist_ok=True)

cfg = config_from_dict({"duration_s": 400, "warmup_s": 100, "seed": 1, "source": {
    "rate": 6.0, "mixture": {"pedestrian": 0.95, "nonassisted_wheelchair": 0.05}}})
summary = summarize_run(run(*cfg.build()))

# %%
# Bins with at least 30 samples are compared against the reference curve.
w = builtin_curve("weidmann")
centres, means, ref = weidmann_reference(summary.density_bins, lambda d: lookup_speed(w, d))
print("Pearson r =", round(float(np.corrcoef(means, ref)[0, 1]), 3))

rho = np.linspace(0.0, 5.4, 200)
fig, ax = plt.subplots()
ax.plot(rho, [lookup_speed(w, d) for d in rho], label="Weidmann")
ax.plot(centres, means, "o", label="simulated bin means")
ax.set_xlabel("perceived density (1/m$^2$)")
ax.set_ylabel("speed (m/s)")
ax.legend()
fig.savefig(os.path.join(OUT, "fundamental_diagram.png"), dpi=100)
