import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finegrid.errors import ConfigError
from finegrid.profiles import (
    ASSISTED_SHAPE,
    NONASSISTED_SHAPE,
    PEDESTRIAN_SHAPE,
    BodyMap,
    DensitySpeedCurve,
    Shape,
    builtin_curve,
    builtin_profile,
    lookup_speed,
    rasterize_body_map,
    scale_curve,
)
from oracles import cell_centre_inclusion

# Evaluated independently with mpmath at 30 digits:
# 1.34 * (1 - exp(-1.913 * (1/rho - 1/5.4)))
WEIDMANN_AT_1 = 1.0580628560768003
SCALED_08_AT_1 = 0.63167931706077629


def test_builtin_curve_values():
    w = builtin_curve("weidmann")
    f = builtin_curve("fruin")
    assert lookup_speed(w, 0.0) == 1.34
    assert lookup_speed(f, 4.0) == 0.0
    assert lookup_speed(f, 10.0) == 0.0
    assert lookup_speed(f, 0.0) == 1.344
    assert lookup_speed(w, 1.0) == pytest.approx(WEIDMANN_AT_1, rel=1e-12)
    assert w.stall_density == 5.4 and f.stall_density == 4.0
    with pytest.raises(ConfigError):
        builtin_curve("greenshields")


def test_lookup_rejects_negative_density():
    with pytest.raises(ValueError):
        lookup_speed(builtin_curve("weidmann"), -0.1)


def test_scale_curve_examples():
    w = builtin_curve("weidmann")
    s = scale_curve(w, 0.8)
    assert lookup_speed(s, 0.0) == 0.8
    assert s.stall_density == 5.4
    assert lookup_speed(s, 1.0) == pytest.approx(SCALED_08_AT_1, rel=1e-12)
    s15 = scale_curve(w, 1.5)
    assert lookup_speed(s15, 0.0) == 1.5
    # Pointwise multiplication oracle.
    np.testing.assert_allclose(s15.speeds, [v * (1.5 / 1.34) for v in w.speeds], rtol=1e-12)
    same = scale_curve(w, w.free_flow_speed)
    assert np.array_equal(same.speeds, w.speeds) and np.array_equal(same.densities, w.densities)
    with pytest.raises(ConfigError):
        scale_curve(w, 0.0)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(["weidmann", "fruin"]), st.floats(0.05, 2.0),
       st.floats(0, 8), st.floats(0, 8))
def test_lookup_non_increasing(family, v_ff, a, b):
    curves = [builtin_curve(family), scale_curve(builtin_curve(family), v_ff)]
    lo, hi = min(a, b), max(a, b)
    for c in curves:
        assert lookup_speed(c, hi) <= lookup_speed(c, lo)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0))
def test_scaled_curves_form_a_ray(a, b):
    base = builtin_curve("weidmann")
    twice = scale_curve(scale_curve(base, a), b)
    positive = base.speeds > 0
    ratio = twice.speeds[positive] / base.speeds[positive]
    np.testing.assert_allclose(ratio, b / base.free_flow_speed, rtol=1e-12)
    assert twice.stall_density == base.stall_density


def test_curve_validation():
    with pytest.raises(ConfigError):
        DensitySpeedCurve.from_table([[0, 1.0], [1, 1.2]])  # increasing speed
    with pytest.raises(ConfigError):
        DensitySpeedCurve.from_table([[0.5, 1.0], [1, 0.5]])  # must start at 0
    c = DensitySpeedCurve.from_table([[0, 1.2], [2, 0.6], [3, 0.0]])
    assert c.stall_density == 3 and lookup_speed(c, 1.0) == pytest.approx(0.9)


def test_axis_aligned_wheelchair_is_22_by_14():
    cells = rasterize_body_map(NONASSISTED_SHAPE, 0)
    rows = cells[:, 0].max() - cells[:, 0].min() + 1
    cols = cells[:, 1].max() - cells[:, 1].min() + 1
    assert (cols, rows) == (22, 14)
    assert len(cells) == 22 * 14
    north = rasterize_body_map(NONASSISTED_SHAPE, 6)
    assert np.ptp(north[:, 0]) + 1 == 22 and np.ptp(north[:, 1]) + 1 == 14


def test_small_square_is_two_by_two():
    sq = Shape("rectangle", 0.10, 0.10)
    for d in range(8):
        cells = set(map(tuple, rasterize_body_map(sq, d)))
        assert (0, 0) in cells and len(cells) == 4
        assert cells == {(-1, -1), (-1, 0), (0, -1), (0, 0)}


@pytest.mark.parametrize("shape", [PEDESTRIAN_SHAPE, NONASSISTED_SHAPE, ASSISTED_SHAPE])
def test_body_maps_match_inclusion_oracle(shape):
    for d in range(8):
        ours = set(map(tuple, rasterize_body_map(shape, d)))
        assert ours == cell_centre_inclusion(shape.kind, shape.width_m, shape.length_m, d)


def test_builtin_profiles():
    ped = builtin_profile("pedestrian")
    assert ped.free_flow_speed == 1.34
    assert builtin_profile("pedestrian", "fruin").free_flow_speed == 1.344
    assert builtin_profile("assisted_wheelchair").free_flow_speed == 1.083
    assert builtin_profile("nonassisted_wheelchair").free_flow_speed == 0.8
    # Counts produced by the shapely inclusion oracle.
    assert ped.body_map.sizes == [48] * 8
    assert builtin_profile("nonassisted_wheelchair").body_map.sizes == [308, 294] * 4
    assert builtin_profile("assisted_wheelchair").body_map.sizes == [448, 428] * 4
    with pytest.raises(ConfigError):
        builtin_profile("bicycle")


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(["ellipse", "rectangle"]), st.floats(0.05, 2.0), st.floats(0.05, 2.0))
def test_footprint_band_and_centre(kind, w, l):
    shape = Shape(kind, w, l)
    raw = [rasterize_body_map(shape, d) for d in range(8)]
    for cells in raw:
        assert (0, 0) in set(map(tuple, cells))
    in_band = max(map(len, raw)) <= 1.15 * min(map(len, raw))
    try:
        sizes = BodyMap.from_shape(shape).sizes
    except ConfigError:
        assert not in_band
        return
    assert in_band and max(sizes) <= 1.15 * min(sizes)


@pytest.mark.parametrize("w,l", [(0.35, 0.55), (0.45, 0.75), (0.55, 1.15), (0.75, 1.05)])
def test_odd_cell_sides_rasterize_exactly(w, l):
    cells = rasterize_body_map(Shape("rectangle", w, l), 0)
    assert np.ptp(cells[:, 1]) + 1 == round(l / 0.05)
    assert np.ptp(cells[:, 0]) + 1 == round(w / 0.05)


def test_degenerate_shape_rejected():
    with pytest.raises(ConfigError):
        Shape("rectangle", 0.0, 1.0)
    with pytest.raises(ConfigError):
        Shape("triangle", 1.0, 1.0)
