"""Shared closed-loop helpers used by the control and acceptance tests."""

import math

from stucksim import kernels
from stucksim.av.command import Behavior
from stucksim.av.control import Controller, StackContext
from stucksim.av.perception import EgoStatus
from stucksim.av.situation import TrafficFacts
from stucksim.config import ControlParams, IdmParams, VehicleParams
from stucksim.geometry import Polyline
from stucksim.world.types import Lane, LaneGraph

IDM = IdmParams()


def idm(v, v_lead, gap, v0=8.33):
    return kernels.idm_accel(v, v_lead, gap, v0, IDM.t_headway, IDM.a_max, IDM.b_comf, IDM.s0, IDM.b_emergency)


def integrate_platoon(dt, duration, n=10, spacing=14.0, v0=8.0):
    """Leader brakes to a stop; followers run the gap law. Returns min net gap."""
    length = 4.8
    xs = [i * -spacing for i in range(n + 1)]
    vs = [v0] * (n + 1)
    min_gap = math.inf
    for k in range(int(duration / dt)):
        t = k * dt
        lead_accel = -3.0 if t >= 5.0 else 0.0
        accs = [lead_accel]
        for i in range(1, n + 1):
            accs.append(idm(vs[i], vs[i - 1], xs[i - 1] - xs[i] - length))
        for i in range(n + 1):
            vs[i] = max(0.0, vs[i] + accs[i] * dt)
            xs[i] += vs[i] * dt
        for i in range(1, n + 1):
            min_gap = min(min_gap, xs[i - 1] - xs[i] - length)
    return min_gap


def straight_graph(length=400.0):
    return LaneGraph(
        [
            Lane("a", Polyline([[0.0, 3.5], [length, 3.5]]), 3.5, right_neighbor="b"),
            Lane("b", Polyline([[0.0, 0.0], [length, 0.0]]), 3.5, left_neighbor="a"),
        ]
    )


def make_status(x, y, heading, speed, lane="b", s=None, limit=8.33):
    return EgoStatus(
        x=x,
        y=y,
        heading=heading,
        speed=speed,
        lane_id=lane,
        s=x if s is None else s,
        stationary_timer=0.0,
        stationary_ticks=0,
        full_stop_timer=0.0,
        destination_flag=False,
        route_remaining_m=100.0,
        route_total_m=120.0,
        route_lane=lane,
        speed_limit=limit,
    )


def closed_loop_lateral(offset0, speed, seconds, dt=0.05):
    """Drive the real lane-keep controller + bicycle model on a straight lane."""
    graph = straight_graph()
    ctrl = Controller(graph, VehicleParams(), IdmParams(), ControlParams(), dt)
    ctx = StackContext()
    veh = VehicleParams()
    x, y, heading, v = 20.0, offset0, 0.0, speed
    trace = []
    for tick in range(int(seconds / dt)):
        status = make_status(x, y, heading, v)
        cmd = ctrl.command(Behavior("lane_keep"), status, [], TrafficFacts(), ctx, tick)
        x, y, heading, v = kernels.bicycle_step(
            x, y, heading, v, cmd.steer, cmd.throttle, cmd.brake, cmd.reverse,
            dt, veh.wheelbase_m, veh.steer_max_rad, veh.accel_gain, veh.brake_gain,
            veh.v_max_fwd, veh.v_max_rev,
        )
        trace.append(y)
    return trace
