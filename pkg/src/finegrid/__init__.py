"""Fine-grid cellular automaton for mixed pedestrian and wheelchair crowds.

Space is a lattice of 5 cm cells; every entity covers many cells through a
direction-dependent body map and moves its centre one Moore step at a time.
"""

from .engine import (
    EngineConfig,
    Scenario,
    Simulation,
    SourceSpec,
    adapt_speed,
    perceive_density,
    run,
    select_next_cell,
    spawn_agents,
    step_tick,
    transition_scores,
)
from .errors import ConfigError, InvariantViolation
from .grid import Grid, build_grid, compute_distance_field, footprint_free
from .metrics import FlowLine, measure_flow, sample_density_speed, summarize, summarize_run
from .profiles import (
    BodyMap,
    DensitySpeedCurve,
    EntityProfile,
    Shape,
    builtin_curve,
    builtin_profile,
    lookup_speed,
    rasterize_body_map,
    scale_curve,
)
from .scenario import ScenarioConfig, config_from_dict, parse_config

__version__ = "0.1.0"
