import json

import pytest

from finegrid.errors import ConfigError
from finegrid.scenario import ScenarioConfig, config_from_dict, parse_config


def _write(tmp_path, data, name="c.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return p


def test_minimal_config_gets_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, {
        "width_m": 3, "length_m": 20, "source": {"rate": 3.0, "mixture": {"pedestrian": 1.0}}}))
    assert cfg.engine.tick_s == 0.025
    assert cfg.engine.lam == 0.05
    assert cfg.engine.duration_s == 1500 and cfg.engine.warmup_s == 100
    assert cfg.source_rate == 3.0 and cfg.flow_line_m == 10.0
    assert cfg.curve_family == "weidmann"


def test_empty_object_is_the_default_corridor():
    cfg = config_from_dict({})
    assert (cfg.width_m, cfg.length_m, cfg.source_rate) == (3.0, 20.0, 6.0)
    scenario, engine = cfg.build()
    assert scenario.grid.occupancy.shape == (60, 400)


@pytest.mark.parametrize("data,key", [
    ({"source": {"mixture": {"pedestrian": 0.5, "nonassisted_wheelchair": 0.4}}}, "source.mixture"),
    ({"lambda": 0.2}, "lambda"),
    ({"lambda": 0.0}, "lambda"),
    ({"tick_s": 0.05}, "tick_s"),
    ({"colour": "red"}, "colour"),
    ({"source": {"rate": 1, "speed": 2}}, "source.speed"),
    ({"duration_s": 50, "warmup_s": 100}, "duration_s"),
    ({"seed": -1}, "seed"),
    ({"seed": 1.5}, "seed"),
    ({"curve_family": "greenshields"}, "curve_family"),
    ({"width_m": "wide"}, "width_m"),
    ({"source": {"mixture": {"bicycle": 1.0}}}, "source.mixture"),
    ({"flow_line_m": 25}, "flow_line_m"),
    ({"obstacles": [[0, 0, 1]]}, "obstacles"),
    ({"profiles": {"pedestrian": {"free_flow_speed": 3.0}}}, "profiles.pedestrian"),
    ({"profiles": {"fast": {"base": "pedestrian", "hat": 1}}}, "profiles.fast.hat"),
])
def test_constraint_violations_name_the_key(tmp_path, data, key):
    with pytest.raises(ConfigError) as info:
        cfg = parse_config(_write(tmp_path, data))
        cfg.build()
    assert info.value.key == key


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="no such file"):
        parse_config(tmp_path / "absent.json")
    with pytest.raises(ConfigError, match="line 2"):
        parse_config(_write(tmp_path, '{"width_m": 3,\n "length_m": }'))
    with pytest.raises(ConfigError, match="top level"):
        parse_config(_write(tmp_path, "[1, 2]"))


def test_custom_profile_override(tmp_path):
    cfg = parse_config(_write(tmp_path, {
        "source": {"mixture": {"pedestrian": 0.9, "scooter": 0.1}},
        "profiles": {"scooter": {"base": "nonassisted_wheelchair", "free_flow_speed": 1.2,
                                 "shape": {"width_m": 0.6, "length_m": 1.2}}},
    }))
    profiles = cfg.build_profiles()
    assert profiles["scooter"].free_flow_speed == 1.2
    assert profiles["scooter"].shape.length_m == 1.2
    assert profiles["scooter"].curve.stall_density == 5.4
    scenario, _ = cfg.build()
    assert set(scenario.profiles) == {"pedestrian", "scooter"}


def test_with_overrides_routes_engine_fields():
    cfg = ScenarioConfig().with_overrides(rng_seed=7, lam=0.02, source_rate=4.0)
    assert cfg.seed == 7 and cfg.engine.lam == 0.02 and cfg.source_rate == 4.0
