"""Controller tests: IDM properties, platoon safety, PID settling, commands."""

import math
import random

import pytest

from stucksim import kernels
from stucksim.av.command import Behavior, ControlCommand
from stucksim.av.control import Controller, StackContext
from stucksim.av.situation import TrafficFacts
from stucksim.config import ControlParams, IdmParams, VehicleParams
from stucksim.geometry import Polyline
from stucksim.world.types import Lane, LaneGraph

from helpers_control import closed_loop_lateral, integrate_platoon, make_status, straight_graph


def test_platoon_min_gap_positive():
    assert integrate_platoon(0.05, 60.0) > 0.0


def test_platoon_fine_step_oracle_agrees():
    coarse = integrate_platoon(0.05, 60.0)
    fine = integrate_platoon(0.005, 60.0)
    assert fine > 0.0
    assert abs(coarse - fine) < 0.5  # same qualitative equilibrium




def test_lateral_pid_settles_half_meter_offset():
    dt = 0.05
    trace = closed_loop_lateral(0.5, 8.0, 6.0, dt)
    within = int(4.0 / dt)
    settled_at = None
    for i, y in enumerate(trace):
        if abs(y) < 0.05 and all(abs(v) < 0.05 for v in trace[i:]):
            settled_at = i
            break
    assert settled_at is not None and settled_at <= within, f"settled at {settled_at}"
    # at most one overshoot: at most two zero crossings (deadband for jitter)
    crossings = 0
    prev_sign = 1.0
    for y in trace:
        if abs(y) < 0.005:
            continue
        sign = math.copysign(1.0, y)
        if sign != prev_sign:
            crossings += 1
            prev_sign = sign
    assert crossings <= 2, f"{crossings} zero crossings"


def test_idm_free_flow_reaches_limit_not_beyond():
    graph = straight_graph()
    dt = 0.05
    ctrl = Controller(graph, VehicleParams(), IdmParams(), ControlParams(), dt)
    ctx = StackContext()
    veh = VehicleParams()
    x, y, heading, v = 10.0, 0.0, 0.0, 0.0
    for tick in range(int(30.0 / dt)):
        status = make_status(x, y, heading, v)
        cmd = ctrl.command(Behavior("lane_keep"), status, [], TrafficFacts(), ctx, tick)
        x, y, heading, v = kernels.bicycle_step(
            x, y, heading, v, cmd.steer, cmd.throttle, cmd.brake, cmd.reverse,
            dt, veh.wheelbase_m, veh.steer_max_rad, veh.accel_gain, veh.brake_gain,
            veh.v_max_fwd, veh.v_max_rev,
        )
    assert 7.9 <= v <= 8.4


def test_stop_ramps_to_full_brake():
    graph = straight_graph()
    ctrl = Controller(graph, VehicleParams(), IdmParams(), ControlParams(), 0.05)
    ctx = StackContext()
    brakes = []
    for tick in range(12):
        cmd = ctrl.command(Behavior("stop"), make_status(20.0, 0.0, 0.0, 6.0), [], TrafficFacts(), ctx, tick)
        brakes.append(cmd.brake)
        assert cmd.throttle == 0.0
    assert brakes == sorted(brakes)
    assert brakes[-1] == 1.0


def test_lane_change_tracks_target_and_completes():
    graph = straight_graph()
    dt = 0.05
    ctrl = Controller(graph, VehicleParams(), IdmParams(), ControlParams(), dt)
    ctx = StackContext()
    veh = VehicleParams()
    x, y, heading, v = 20.0, 0.0, 0.0, 6.0
    lat_to_target = None
    for tick in range(int(6.0 / dt)):
        lane_id = "b" if y < 1.75 else "a"
        status = make_status(x, y, heading, v, lane=lane_id)
        cmd = ctrl.command(Behavior("lane_change_left"), status, [], TrafficFacts(), ctx, tick)
        x, y, heading, v = kernels.bicycle_step(
            x, y, heading, v, cmd.steer, cmd.throttle, cmd.brake, cmd.reverse,
            dt, veh.wheelbase_m, veh.steer_max_rad, veh.accel_gain, veh.brake_gain,
            veh.v_max_fwd, veh.v_max_rev,
        )
        lat_to_target = y - 3.5
    assert ctx.lane_change is not None and ctx.lane_change.target_lane == "a"
    assert abs(lat_to_target) < 0.2


def test_lane_change_without_neighbor_is_infeasible():
    from stucksim.av.control import InfeasibleBehavior

    graph = LaneGraph([Lane("b", Polyline([[0, 0], [100, 0]]), 3.5)])
    ctrl = Controller(graph, VehicleParams(), IdmParams(), ControlParams(), 0.05)
    with pytest.raises(InfeasibleBehavior):
        ctrl.command(Behavior("lane_change_left"), make_status(10.0, 0.0, 0.0, 3.0), [], TrafficFacts(), StackContext(), 0)


def test_reverse_moves_backwards():
    graph = straight_graph()
    dt = 0.05
    ctrl = Controller(graph, VehicleParams(), IdmParams(), ControlParams(), dt)
    ctx = StackContext()
    veh = VehicleParams()
    x, y, heading, v = 50.0, 0.0, 0.0, 0.0
    for tick in range(int(4.0 / dt)):
        cmd = ctrl.command(Behavior("reverse", distance_m=3.0), make_status(x, y, heading, v), [], TrafficFacts(), ctx, tick)
        assert cmd.reverse
        x, y, heading, v = kernels.bicycle_step(
            x, y, heading, v, cmd.steer, cmd.throttle, cmd.brake, cmd.reverse,
            dt, veh.wheelbase_m, veh.steer_max_rad, veh.accel_gain, veh.brake_gain,
            veh.v_max_fwd, veh.v_max_rev,
        )
    assert x < 50.0 - 1.5
    assert -1.3 <= v <= 0.0


def test_command_invariants_random_states():
    graph = straight_graph()
    ctrl = Controller(graph, VehicleParams(), IdmParams(), ControlParams(), 0.05)
    rng = random.Random(5)
    behaviors = [Behavior("lane_keep"), Behavior("stop"), Behavior("wait", duration_s=2.0), Behavior("lane_change_left")]
    ctx = StackContext()
    for tick in range(500):
        b = behaviors[rng.randrange(len(behaviors))]
        status = make_status(rng.uniform(5, 300), rng.uniform(-1, 5), rng.uniform(-0.3, 0.3), rng.uniform(0, 12))
        cmd = ctrl.command(b, status, [], TrafficFacts(), ctx, tick)
        assert cmd.throttle * cmd.brake == 0.0
        assert -1.0 <= cmd.steer <= 1.0
        assert 0.0 <= cmd.throttle <= 1.0
        assert 0.0 <= cmd.brake <= 1.0


def test_control_command_rejects_dual_engagement():
    with pytest.raises(ValueError):
        ControlCommand(throttle=0.5, brake=0.5)
