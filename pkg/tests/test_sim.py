import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipeclimber.errors import FeasibilityError, PathRangeError, ValidationError
from pipeclimber.geometry import Bend, PipeNetwork, PipeSpec, Straight, arc_bounds, pose_at
from pipeclimber.sim import (
    FRONT,
    REAR,
    SimConfig,
    available_diameter,
    gravity_load_distribution,
    preload_travel,
    response_delays,
    simulate,
    stiffness_grid,
    summarize,
    sweep_stiffness,
)

from helpers import make_bend_network, make_prototype_design

# m g / (springs_per_module K_s) in mm for the prototype constants.
SAG_ONE_MODULE = 63.82475083056478
# Chord relation half way through a 90 degree, R=90 bend in a 160 mm pipe.
MID_BEND_DIAMETER = 144.60760903638771


def test_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(velocity=0)
    with pytest.raises(ValidationError):
        SimConfig(dt=-1)
    with pytest.raises(ValidationError):
        SimConfig(velocity=100, dt=0.06)  # 6 mm step
    with pytest.raises(ValidationError):
        SimConfig(friction_sign=0)


def test_vertical_straight_is_flat(prototype_design, vertical_network):
    trace = simulate(vertical_network, prototype_design)
    assert np.all(trace.compression == 0.0)
    assert not trace.saturated.any()
    assert np.ptp(trace.slip_margin) == 0.0
    assert np.allclose(trace.normal_force, 2 * 2 * 18.06 * 0.026)


def test_rows_and_positions(prototype_design, vertical_network):
    trace = simulate(vertical_network, prototype_design, SimConfig(velocity=100, dt=0.001))
    assert len(trace) == 5001
    assert trace.s[0] == 0.0 and trace.s[-1] == pytest.approx(500.0)
    assert np.allclose(trace.s, 100 * trace.t, rtol=0, atol=1e-9)
    assert np.array_equal(trace.t, np.arange(5001) * 0.001)


def test_start_offset(prototype_design, vertical_network):
    trace = simulate(vertical_network, prototype_design, SimConfig(s0=250.0))
    assert len(trace) == 2501 and trace.s[0] == 250.0
    with pytest.raises(ValidationError):
        simulate(vertical_network, prototype_design, SimConfig(s0=600.0))


def test_available_diameter(bend_network):
    a, b = arc_bounds(bend_network, 1)
    assert available_diameter(bend_network, 100.0, 150.0) == 160.0
    assert available_diameter(bend_network, a, 150.0) == pytest.approx(160.0)
    assert available_diameter(bend_network, (a + b) / 2, 150.0) == pytest.approx(MID_BEND_DIAMETER, abs=1e-9)
    with pytest.raises(PathRangeError):
        available_diameter(bend_network, -1.0, 150.0)


def test_available_diameter_never_below_lower_bound():
    # long gentle bend: depth reaches the full body length
    net = PipeNetwork(PipeSpec(160), (Straight(10), Bend(90, 400, "up"), Straight(10)))
    a, b = arc_bounds(net, 1)
    s = np.linspace(a, b, 101)
    d = available_diameter(net, s, 150.0)
    assert np.all(d <= 160.0) and np.all(d >= 0.0)
    assert d.min() == pytest.approx(math.sqrt(480 ** 2 - 150 ** 2) - 320, abs=1e-9)


def test_gravity_on_horizontal_pipe(prototype_design):
    net = PipeNetwork(PipeSpec(160), (Straight(100, incline=0),))
    pose = pose_at(net, 50.0)
    # with no bend, module 0 points down at zero roll
    assert gravity_load_distribution(pose, prototype_design, net) == pytest.approx((SAG_ONE_MODULE, 0.0, 0.0))
    # rolled half a turn, modules 1 and 2 sit 30 degrees below horizontal and share equally
    rolled = gravity_load_distribution(pose, prototype_design, net, roll=180)
    assert rolled == pytest.approx((0.0, SAG_ONE_MODULE / 2, SAG_ONE_MODULE / 2))


def test_gravity_on_vertical_pipe(prototype_design, vertical_network):
    pose = pose_at(vertical_network, 10.0)
    assert gravity_load_distribution(pose, prototype_design, vertical_network) == (0.0, 0.0, 0.0)


def test_preload_travel(prototype_design):
    assert preload_travel(prototype_design, 160.0) == pytest.approx(1.665)


def test_infeasible_diameter(vertical_network):
    with pytest.raises(FeasibilityError) as err:
        simulate(vertical_network, make_prototype_design(d_max=150.0, d_min=120.0))
    assert err.value.segment_index == 0


def test_infeasible_bend(bend_network):
    with pytest.raises(FeasibilityError) as err:
        simulate(bend_network, make_prototype_design(d_min=100.0))
    assert err.value.segment_index == 1


def test_length_bound_is_warning(prototype_design, bend_network):
    trace = simulate(bend_network, prototype_design)
    assert any("chord bound 97.10" in w for w in trace.warnings)


def test_bend_traversal_shape(prototype_design, bend_network):
    trace = simulate(bend_network, prototype_design)
    summary = summarize(trace)
    assert summary.delay == pytest.approx(0.300, abs=1e-3)
    assert summary.front_expansion
    # module 0 sits on the outer wall, 1 and 2 on the inner side after the turn
    final = summary.final_compression
    assert final[1] > final[0] and final[2] > final[0]
    assert summary.saturation_events > 0


def test_rear_is_delayed_front(prototype_design, bend_network):
    trace = simulate(bend_network, prototype_design)
    lag = round(prototype_design.spring_spacing / (100 * 0.001))
    front = trace.compression[:-lag, :, FRONT]
    rear = trace.compression[lag:, :, REAR]
    # stations agree once both have the same arc position and the same body pose
    assert np.allclose(front, rear, atol=1e-9)


def test_delays_per_module(prototype_design, bend_network):
    delays = response_delays(simulate(bend_network, prototype_design))
    assert all(d == pytest.approx(0.3, abs=1e-3) for d in delays if d is not None)


def test_springs_view(prototype_design, bend_network):
    trace = simulate(bend_network, prototype_design)
    states = trace.springs(len(trace) // 2)
    assert len(states) == 6
    assert {(s.module_id, s.station) for s in states} == {(m, st) for m in range(3) for st in ("front", "rear")}


def test_deterministic(prototype_design, bend_network):
    a = simulate(bend_network, prototype_design)
    b = simulate(bend_network, prototype_design)
    assert np.array_equal(a.compression, b.compression)
    assert np.array_equal(a.slip_margin, b.slip_margin)


def test_halving_dt_keeps_shared_samples(prototype_design, bend_network):
    coarse = simulate(bend_network, prototype_design, SimConfig(dt=0.002))
    fine = simulate(bend_network, prototype_design, SimConfig(dt=0.001))
    assert np.allclose(coarse.compression, fine.compression[::2][: len(coarse)], atol=1e-9)


def test_friction_sign_changes_effort_only(prototype_design, bend_network):
    paper = simulate(bend_network, prototype_design, SimConfig(friction_sign=-1))
    phys = simulate(bend_network, prototype_design, SimConfig(friction_sign=+1))
    assert np.array_equal(paper.slip_margin, phys.slip_margin)
    assert np.all(phys.tractive_effort > paper.tractive_effort)


def test_stiffness_grid():
    assert stiffness_grid(16, 26, 0.5) == [16 + 0.5 * i for i in range(21)]
    assert stiffness_grid(0.1, 0.3, 0.1) == [0.1, 0.2, 0.3]
    for bad in [(26, 16, 0.5), (16, 26, 0), (0, 1, 0.5), (16, float("inf"), 1)]:
        with pytest.raises(ValidationError):
            stiffness_grid(*bad)


def test_sweep_vertical(prototype_design, vertical_network):
    result = sweep_stiffness(vertical_network, prototype_design, SimConfig(dt=0.01), 16, 26, 0.5)
    margins = [r.min_slip_margin for r in result.rows]
    assert all(b > a for a, b in zip(margins, margins[1:]))
    assert result.first_feasible_stiffness == 21.5


def test_sweep_higher_friction(prototype_design, vertical_network):
    design = replace(prototype_design, mu_static=0.9)
    result = sweep_stiffness(vertical_network, design, SimConfig(dt=0.01), 16, 26, 0.5)
    assert result.first_feasible_stiffness == 16.5


def test_sweep_none_feasible(prototype_design, vertical_network):
    result = sweep_stiffness(vertical_network, prototype_design, SimConfig(dt=0.01), 1, 5, 1)
    assert result.first_feasible is None and result.first_feasible_stiffness is None


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0, 360),
    st.sampled_from(["up", "down", "left", "right"]),
    st.floats(60, 400),
    st.floats(20, 90),
    st.floats(5, 120),
)
def test_compression_within_travel(roll, direction, radius, angle, spacing):
    net = PipeNetwork(PipeSpec(160), (Straight(200, incline=90), Bend(angle, radius, direction), Straight(200)))
    design = make_prototype_design(spring_spacing=spacing, d_min=120.0)
    try:
        trace = simulate(net, design, SimConfig(dt=0.01, roll=roll))
    except FeasibilityError:
        return
    p0 = preload_travel(design, 160.0)
    # preload travel plus delta stays inside the physical range of the module
    total = p0 + trace.compression
    assert np.all(total >= -1e-9)
    assert np.all(total <= design.max_travel + 1e-9)
    assert np.all(np.isfinite(trace.slip_margin))
    # every step is at most 5 mm of centroid travel
    assert np.all(np.diff(trace.s) <= 5.0 + 1e-12)


def test_tight_bend_reports_segment():
    net = PipeNetwork(PipeSpec(160), (Straight(200, incline=90), Bend(20, 60, "up"), Straight(200)))
    with pytest.raises(FeasibilityError) as err:
        simulate(net, make_prototype_design(d_min=120.0), SimConfig(roll=60))
    assert err.value.segment_index == 1
