"""
One corridor run
================

A 3 m x 20 m corridor fed at 6 arrivals per second, pedestrians only. The
flow line sits at mid-corridor; flow is crossings per second per metre.
"""

# %%
import os

from finegrid import summarize_run
from finegrid.cli import run_scenario
from finegrid.engine import run
from finegrid.scenario import config_from_dict

OUT = os.environ.get("FINEGRID_NOTEBOOK_OUT", os.path.join(os.path.dirname(__file__), "_out"))

# %%
# A shortened run keeps the demo under a minute. Acceptance uses 1500 s.
cfg = config_from_dict({"duration_s": 300, "warmup_s": 100, "seed": 1,
                        "source": {"rate": 6.0, "mixture": {"pedestrian": 1.0}}})
scenario, engine_cfg = cfg.build()
metrics = run(scenario, engine_cfg)
summary = summarize_run(metrics)
print(f"mean flow {summary.mean_flow:.3f} /(m s), peak 60 s flow {summary.peak_flow_60s:.3f}")
print("arrivals", metrics.arrivals, "exited", metrics.exited,
      "present", metrics.present, "queued", metrics.queued)

# %%
# The same run through the file interface writes four CSV files.
summary = run_scenario(cfg, os.path.join(OUT, "corridor"))
print(sorted(os.listdir(os.path.join(OUT, "corridor"))))
