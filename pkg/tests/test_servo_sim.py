"""Closed-loop tracking: control law, plant stepping, path following, logging.

The convergence-rate tests check the two regimes the plant model produces:
exponential error decay when the actuator is unconstrained, and linear decay
while its speed is clamped at the rate limit.
"""
import math

import numpy as np
import pytest

from laserscan.errors import (
    NoAblationError,
    SingularInteractionError,
    StalledWaypointError,
)
from laserscan.intra_path import ABLATE, TRAVEL, Polyline, straight_travel
from laserscan.servo_sim import (
    CSV_HEADER,
    IDEAL,
    SATURATED_DEADBAND,
    ControllerConfig,
    PlantModel,
    TrajectoryLog,
    ablation_samples,
    control_law,
    flatten_path,
    follow_path,
    step_plant,
    visual_error,
)


def single_waypoint_path(x=300.0, y=0.0, mode=ABLATE):
    return [Polyline(np.array([[x, y]]), mode)]


def test_visual_error_is_measured_minus_desired():
    err = visual_error([3.0, 4.0], [1.0, 1.0])
    np.testing.assert_array_equal(err, [2.0, 3.0])
    err = visual_error([5.0, 7.0], [2.0, 3.0])
    np.testing.assert_array_equal(err, [3.0, 4.0])
    assert np.linalg.norm(err) == 5.0
    np.testing.assert_array_equal(visual_error([5.0, 7.0], [5.0, 7.0]), [0.0, 0.0])
    np.testing.assert_array_equal(
        visual_error([1.0, 2.0], [8.0, -3.0]), -visual_error([8.0, -3.0], [1.0, 2.0])
    )


def test_control_law_identity_estimate():
    cfg = ControllerConfig(gain=2.0, interaction_estimate=np.eye(2))
    np.testing.assert_array_equal(control_law(np.array([1.0, -1.0]), cfg), [-2.0, 2.0])
    np.testing.assert_array_equal(control_law(np.zeros(2), cfg), [0.0, 0.0])


def test_control_law_inverts_the_estimate():
    rng = np.random.default_rng(1)
    for _ in range(20):
        est = rng.normal(0, 1, (2, 2)) + 3 * np.eye(2)
        cfg = ControllerConfig(gain=0.8, interaction_estimate=est)
        e = rng.normal(0, 10, 2)
        cmd = control_law(e, cfg)
        # est @ cmd must equal -gain * e: the plant sees the corrective rate.
        np.testing.assert_allclose(est @ cmd, -0.8 * e, atol=1e-9)


def test_control_law_rejects_singular_estimate():
    cfg = ControllerConfig(interaction_estimate=[[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularInteractionError, match="singular"):
        control_law(np.array([1.0, 0.0]), cfg)


def test_controller_config_validation():
    with pytest.raises(ValueError):
        ControllerConfig(gain=0.0)
    with pytest.raises(ValueError):
        ControllerConfig(dt=-0.1)
    with pytest.raises(ValueError):
        ControllerConfig(interaction_estimate=np.eye(3))
    with pytest.raises(ValueError):
        ControllerConfig(measurement_noise_px=-1.0)


def test_plant_model_validation():
    with pytest.raises(ValueError):
        PlantModel(kind="frictionless")
    with pytest.raises(ValueError):
        PlantModel(gain_matrix=[[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        PlantModel(kind=SATURATED_DEADBAND, rate_limit=0.01, deadband=0.05)


def test_step_ideal_plant_applies_gain_matrix():
    plant = PlantModel(kind=IDEAL, gain_matrix=np.diag([2.0, 1.0]))
    out = step_plant(np.array([5.0, 5.0]), np.array([1.0, 0.0]), plant, dt=0.1)
    np.testing.assert_allclose(out, [5.2, 5.0], atol=1e-12)


def test_step_ideal_plant_unit_gain_realizes_command():
    out = step_plant(np.zeros(2), np.array([1.0, 0.0]), PlantModel(kind=IDEAL), dt=0.1)
    np.testing.assert_allclose(out, [0.1, 0.0], atol=1e-15)


def test_step_saturation_clamps_speed_but_not_direction():
    plant = PlantModel(kind=SATURATED_DEADBAND, rate_limit=10.0, deadband=0.1)
    cmd = np.array([30.0, 40.0])  # mapped speed 50, far over the limit
    out = step_plant(np.zeros(2), cmd, plant, dt=1.0)
    assert math.hypot(*out) == pytest.approx(10.0, abs=1e-12)
    np.testing.assert_allclose(out / np.linalg.norm(out), cmd / np.linalg.norm(cmd), atol=1e-12)


def test_step_deadband_freezes_slow_commands():
    plant = PlantModel(kind=SATURATED_DEADBAND, rate_limit=10.0, deadband=0.5)
    out = step_plant(np.array([1.0, 2.0]), np.array([0.1, 0.1]), plant, dt=1.0)
    np.testing.assert_array_equal(out, [1.0, 2.0])


def test_step_plant_requires_positive_dt():
    with pytest.raises(ValueError):
        step_plant(np.zeros(2), np.zeros(2), PlantModel(kind=IDEAL), dt=0.0)


def test_flatten_path_orders_and_flags():
    travel = straight_travel(np.zeros(2), np.array([2.0, 0.0]), step=0.5)
    sweep = Polyline(np.array([[2.0, 0.0], [2.5, 0.0]]), ABLATE)
    targets, flags, owner = flatten_path([travel, sweep])
    assert len(targets) == len(travel) + 2
    assert not flags[: len(travel)].any()
    assert flags[len(travel) :].all()
    assert owner[0] == 0 and owner[-1] == 1
    with pytest.raises(ValueError):
        flatten_path([])


def test_follow_path_skips_waypoints_already_reached():
    ctrl = ControllerConfig(gain=0.5, convergence_threshold=1.0, dt=0.1)
    log = follow_path(
        single_waypoint_path(0.2, 0.0), ctrl, PlantModel(kind=IDEAL), np.zeros(2)
    )
    assert len(log) == 0


def test_follow_path_exponential_decay_under_ideal_plant():
    # gain * dt = 0.05: each step multiplies the error by exactly 0.95.
    ctrl = ControllerConfig(gain=0.5, convergence_threshold=1.0, dt=0.1)
    log = follow_path(single_waypoint_path(), ctrl, PlantModel(kind=IDEAL), np.zeros(2))
    ratios = log.errors[1:] / log.errors[:-1]
    np.testing.assert_allclose(ratios, 0.95, atol=1e-9)
    assert log.errors[-1] < 1.0
    # Post-step bookkeeping: first row is one step after start.
    assert log.errors[0] == pytest.approx(300.0 * 0.95, abs=1e-9)
    assert log.iterations[0] == 0
    assert log.time_s[0] == pytest.approx(0.1)
    np.testing.assert_allclose(np.diff(log.time_s), 0.1, atol=1e-12)


def test_follow_path_linear_decay_while_saturated():
    ctrl = ControllerConfig(gain=0.5, convergence_threshold=1.0, dt=0.1)
    plant = PlantModel(kind=SATURATED_DEADBAND, rate_limit=25.0, deadband=0.05)
    log = follow_path(single_waypoint_path(), ctrl, plant, np.zeros(2))
    saturated = log.errors[log.errors > 50.0 + 1e-9]
    steps = np.diff(saturated)
    np.testing.assert_allclose(steps, -2.5, atol=1e-9)
    assert log.errors[-1] < 1.0


@pytest.mark.parametrize("degrees", [15.0, 30.0, 45.0])
def test_follow_path_tolerates_interaction_mismatch(degrees):
    # True map is a rotation the controller does not know about; for any
    # mismatch under 90 degrees the loop still contracts.
    theta = math.radians(degrees)
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    ctrl = ControllerConfig(gain=0.5, convergence_threshold=1.0, dt=0.1)
    plant = PlantModel(kind=IDEAL, gain_matrix=rot)
    log = follow_path(single_waypoint_path(100.0, -40.0), ctrl, plant, np.zeros(2))
    assert log.errors[-1] < 1.0
    assert (np.diff(log.errors) < 1e-9).all()  # Lyapunov-style decrease


def test_follow_path_stalls_when_deadband_blocks_convergence():
    ctrl = ControllerConfig(gain=0.5, convergence_threshold=1.0, dt=0.1)
    plant = PlantModel(kind=SATURATED_DEADBAND, rate_limit=50.0, deadband=30.0)
    with pytest.raises(StalledWaypointError, match="deadband"):
        follow_path(
            single_waypoint_path(5.0, 0.0),
            ctrl,
            plant,
            np.zeros(2),
            max_iter_per_waypoint=50,
        )


def test_follow_path_laser_flag_follows_mode():
    ctrl = ControllerConfig(gain=4.0, convergence_threshold=1.0, dt=0.1)
    plant = PlantModel(kind=IDEAL)
    travel = straight_travel(np.zeros(2), np.array([8.0, 0.0]), step=0.5)
    sweep = Polyline(np.array([[8.0, 0.0], [8.5, 0.0], [9.0, 0.0]]), ABLATE)
    log = follow_path([travel, sweep], ctrl, plant, np.array([-3.0, 0.0]))
    targets, flags, _ = flatten_path([travel, sweep])
    assert set(np.unique(log.waypoints)) <= set(range(len(targets)))
    np.testing.assert_array_equal(log.laser_on, flags[log.waypoints])
    idx = ablation_samples(log)
    assert (log.waypoints[idx] >= len(travel)).all()


def test_ablation_samples_require_an_ablate_phase():
    ctrl = ControllerConfig(gain=0.5, convergence_threshold=1.0, dt=0.1)
    log = follow_path(
        single_waypoint_path(40.0, 0.0, mode=TRAVEL),
        ctrl,
        PlantModel(kind=IDEAL),
        np.zeros(2),
    )
    with pytest.raises(NoAblationError):
        ablation_samples(log)


def test_measurement_noise_seeded_and_reproducible():
    ctrl_a = ControllerConfig(
        gain=0.5, convergence_threshold=1.0, dt=0.1, measurement_noise_px=0.2, noise_seed=3
    )
    ctrl_b = ControllerConfig(
        gain=0.5, convergence_threshold=1.0, dt=0.1, measurement_noise_px=0.2, noise_seed=3
    )
    ctrl_c = ControllerConfig(
        gain=0.5, convergence_threshold=1.0, dt=0.1, measurement_noise_px=0.2, noise_seed=4
    )
    plant = PlantModel(kind=IDEAL)
    log_a = follow_path(single_waypoint_path(60.0, 10.0), ctrl_a, plant, np.zeros(2))
    log_b = follow_path(single_waypoint_path(60.0, 10.0), ctrl_b, plant, np.zeros(2))
    log_c = follow_path(single_waypoint_path(60.0, 10.0), ctrl_c, plant, np.zeros(2))
    np.testing.assert_array_equal(log_a.positions, log_b.positions)
    assert not np.array_equal(log_a.positions, log_c.positions)


def test_trajectory_csv_round_trip(tmp_path):
    ctrl = ControllerConfig(gain=4.0, convergence_threshold=1.0, dt=0.1)
    travel = straight_travel(np.zeros(2), np.array([6.0, 2.0]), step=0.5)
    sweep = Polyline(np.array([[6.0, 2.0], [6.5, 2.0]]), ABLATE)
    log = follow_path([travel, sweep], ctrl, PlantModel(kind=IDEAL), np.array([-2.0, 0.0]))
    path = tmp_path / "trajectory.csv"
    log.write_csv(path)
    first = path.read_text().splitlines()[0]
    assert first == CSV_HEADER == "iter,time_s,x_px,y_px,waypoint,err_px,vx,vy,laser_on"
    back = TrajectoryLog.read_csv(path)
    assert len(back) == len(log)
    np.testing.assert_array_equal(back.iterations, log.iterations)
    np.testing.assert_array_equal(back.waypoints, log.waypoints)
    np.testing.assert_array_equal(back.laser_on, log.laser_on)
    # repr serialisation round-trips bit for bit
    np.testing.assert_array_equal(back.positions, log.positions)
    np.testing.assert_array_equal(back.errors, log.errors)
    np.testing.assert_array_equal(back.commands, log.commands)
    np.testing.assert_array_equal(back.time_s, log.time_s)


def test_trajectory_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("iter,time,x,y\n0,0.1,1,2\n")
    with pytest.raises(ValueError, match="header"):
        TrajectoryLog.read_csv(path)


def test_follow_path_deterministic_without_noise():
    ctrl = ControllerConfig(gain=4.0, convergence_threshold=1.0, dt=0.1)
    plant = PlantModel()
    path = [straight_travel(np.zeros(2), np.array([20.0, 5.0]), step=0.5)]
    a = follow_path(path, ctrl, plant, np.array([1.0, 1.0]))
    b = follow_path(path, ctrl, plant, np.array([1.0, 1.0]))
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.commands, b.commands)
