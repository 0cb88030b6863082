import math

import numpy as np
import pytest

from morphsim.control import GaitProgram, N_ACTUATORS, zero_genome
from morphsim.environment import (FLAT, EvalConfig, Environment, desk_config,
                                  evaluate, gravity_for_incline, place_robot,
                                  placement_rotation)
from morphsim.robot import instantiate_robot

G = 9.80665


def test_gravity_flat():
    assert gravity_for_incline(0.0).tolist() == [0.0, 0.0, -G]


def test_gravity_steep_limit():
    g = gravity_for_incline(90.0 - 1e-9)
    assert g[0] == pytest.approx(G, rel=1e-12)
    assert abs(g[2]) < 1e-9


def test_gravity_14_degrees():
    a = math.radians(14.0)
    g = gravity_for_incline(14.0)
    assert np.allclose(g, [G * math.sin(a), 0.0, -G * math.cos(a)], rtol=0, atol=1e-15)
    assert np.linalg.norm(g) == pytest.approx(G)


@pytest.mark.parametrize("deg", [-1.0, 90.0, 120.0])
def test_gravity_rejects_out_of_range(deg):
    with pytest.raises(ValueError):
        gravity_for_incline(deg)


@pytest.mark.parametrize("text, deg", [("flat", 0.0), ("incline:5", 5.0),
                                       (" Incline:12.5 ", 12.5)])
def test_environment_parse(text, deg):
    assert Environment.parse(text).incline_deg == deg


@pytest.mark.parametrize("text", ["hill", "incline:", "incline:abc", "incline:95",
                                  "incline:nan"])
def test_environment_parse_rejects(text):
    with pytest.raises(ValueError):
        Environment.parse(text)


def test_goal_points_uphill():
    env = Environment(10.0)
    assert env.goal @ env.gravity < 0


def _travel_axis(theta):
    """World direction of the body's travel axis (sin theta, cos theta, 0)."""
    t = math.radians(theta)
    return placement_rotation(theta, FLAT) @ np.array([math.sin(t), math.cos(t), 0.0])


@pytest.mark.parametrize("theta", [0.0, 30.0, 90.0])
def test_travel_axis_turned_onto_goal(theta):
    assert np.allclose(_travel_axis(theta), FLAT.goal, atol=1e-15)


def test_width_wise_and_length_wise_placement():
    body_x = np.array([1.0, 0.0, 0.0])   # length axis
    # width-wise: the leading edge (the length axis) lies along the contour line
    assert abs((placement_rotation(0.0, FLAT) @ body_x) @ FLAT.goal) < 1e-15
    # length-wise: the length axis points along the goal
    assert (placement_rotation(90.0, FLAT) @ body_x) @ FLAT.goal == pytest.approx(1.0)


def test_placement_idempotent_and_on_floor():
    r = instantiate_robot()
    place_robot(r, 0.0, FLAT)
    first = r.lattice.position.copy()
    place_robot(r, 0.0, FLAT)
    assert np.array_equal(first, r.lattice.position)
    com = r.lattice.center_of_mass()
    assert abs(com[0]) < 1e-15 and abs(com[1]) < 1e-15
    assert r.lattice.position[:, 2].min() == pytest.approx(0.005)


def test_eval_config_validation():
    with pytest.raises(ValueError):
        EvalConfig(actuation_interval=0)
    with pytest.raises(ValueError):
        EvalConfig(settle_steps=10, pressure_ramp_steps=20)
    with pytest.raises(ValueError):
        EvalConfig(columns=16, tile=3)
    with pytest.raises(ValueError):
        EvalConfig(friction_grip=-1.0)


def test_desk_config_keeps_timestep_and_columns():
    d, full = desk_config(), EvalConfig()
    assert (d.dt, d.columns, d.actuation_interval) == (full.dt, full.columns,
                                                        full.actuation_interval)
    assert d.steps_per_column < full.steps_per_column


def test_evaluate_bookkeeping(tiny_cfg):
    res = evaluate(zero_genome(), FLAT, tiny_cfg)
    total = tiny_cfg.scheduled_steps
    assert res.trajectory.shape == (1 + total // tiny_cfg.sample_interval, 3)
    assert res.column_com.shape == (tiny_cfg.columns + 1, 3)
    # the kernel sums the centre of mass in its own order, so allow round-off
    assert np.allclose(res.trajectory[0], res.reference_com, rtol=0, atol=1e-15)
    assert np.allclose(res.trajectory[-1], res.final_com, rtol=0, atol=1e-15)
    assert res.body_length_m == pytest.approx(0.15)
    assert res.speed_bls == pytest.approx(
        res.displacement_m / (0.15 * tiny_cfg.duration_s))


def test_evaluate_rejects_wrong_schedule_width(tiny_cfg):
    prog = GaitProgram("x", 0.0, 90.0, np.zeros((N_ACTUATORS, 8), dtype=np.uint8))
    with pytest.raises(ValueError):
        evaluate(prog, FLAT, tiny_cfg)


@pytest.mark.slow
def test_unactuated_flat_robot_stays_put():
    res = evaluate(zero_genome(), FLAT, desk_config())
    assert abs(res.speed_bls) < 1e-3
    assert abs(res.displacement_m) < 1e-4
