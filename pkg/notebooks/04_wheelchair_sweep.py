"""
Flow against wheelchair share
=============================

Sweeping the wheelchair share of arrivals shows how slower, larger entities
reduce corridor throughput. Self-propelled chairs (0.8 m/s) cost more flow
than assisted ones (1.083 m/s).
"""

# %%
import os

import numpy as np

from finegrid.cli import batch_sweep
from finegrid.scenario import config_from_dict

OUT = os.environ.get("FINEGRID_NOTEBOOK_OUT", os.path.join(os.path.dirname(__file__), "_out"))

# %%
# Short runs and one seed per point; the acceptance sweep uses 1500 s and 3 seeds.
cfg = config_from_dict({"duration_s": 300, "warmup_s": 100, "seed": 1, "source": {"rate": 6.0}})
ratios = [0.0, 0.1, 0.2]
for profile in ("nonassisted_wheelchair", "assisted_wheelchair"):
    rows = batch_sweep(cfg, ratios, profile, seeds=1, out=os.path.join(OUT, profile))
    means = [row[3] for row in rows if row[0] == "mean"]
    slope = np.polyfit(ratios, means, 1)[0]
    print(profile, ["%.3f" % m for m in means], "slope %.3f" % slope)
