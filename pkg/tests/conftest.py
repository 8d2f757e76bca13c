import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from finegrid import EngineConfig, Scenario, Simulation, SourceSpec, build_grid, builtin_profile
from finegrid.metrics import FlowLine


def corridor(length=12.0, width=3.0, rate=0.0, mixture=None, seed=0, names=None, **engine_kw):
    """A straight corridor with a 1 m exit strip at the far end."""
    mixture = mixture or {"pedestrian": 1.0}
    names = names or list(mixture)
    grid = build_grid(length, width, targets={"exit": (length - 1.0, 0.0, length, width)})
    profiles = {n: builtin_profile(n) for n in names}
    sources = [SourceSpec((0.0, 0.0, 1.0, width), rate, mixture)] if rate else []
    scenario = Scenario(grid, "exit", profiles, sources, FlowLine(length / 2, width))
    return Simulation(scenario, EngineConfig(rng_seed=seed, **engine_kw))


@pytest.fixture
def make_corridor():
    return corridor
