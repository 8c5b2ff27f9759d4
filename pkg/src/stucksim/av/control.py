"""Low-level behavior execution.

Lane keeping runs a lateral PID on cross-track error plus a heading
feedforward; car-following runs the intelligent driver model; lane changes
track a quintic lateral reference with a separate longitudinal speed PID;
stops ramp the brake to full.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .. import kernels
from ..config import ControlParams, IdmParams, VehicleParams
from ..geometry import wrap_angle
from ..world.types import LaneGraph
from .command import Behavior, ControlCommand
from .perception import EgoStatus, ObjectMeasurement
from .situation import Lead, TrafficFacts, idm_leads


class InfeasibleBehavior(Exception):
    """Requested behavior cannot be executed (e.g. no neighbor lane)."""


@dataclass
class PidState:
    integral: float = 0.0
    prev_error: Optional[float] = None

    def step(self, error: float, kp: float, ki: float, kd: float, dt: float) -> float:
        self.integral += error * dt
        deriv = 0.0 if self.prev_error is None else (error - self.prev_error) / dt
        self.prev_error = error
        return kp * error + ki * self.integral + kd * deriv

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error = None


@dataclass
class LaneChangeState:
    target_lane: str
    start_tick: int
    d0: float
    speed_target: float
    v0: float = 0.0


@dataclass
class StackContext:
    """Mutable controller and decision state, owned by the simulation loop."""

    lat_pid: PidState = field(default_factory=PidState)
    lon_pid: PidState = field(default_factory=PidState)
    lane_change: Optional[LaneChangeState] = None
    stop_brake: float = 0.0
    satisfied_signs: set = field(default_factory=set)
    sign_hold: dict = field(default_factory=dict)
    latches: set = field(default_factory=set)


class Controller:
    """Maps a behavior to actuator commands, one call per tick."""

    def __init__(
        self,
        graph: LaneGraph,
        vehicle: VehicleParams,
        idm: IdmParams,
        params: ControlParams,
        dt: float,
    ):
        self.graph = graph
        self.vehicle = vehicle
        self.idm = idm
        self.params = params
        self.dt = dt

    def command(
        self,
        behavior: Behavior,
        status: EgoStatus,
        measurements: list[ObjectMeasurement],
        facts: TrafficFacts,
        ctx: StackContext,
        tick: int,
        unsatisfied_signs: frozenset = frozenset(),
        exclude_ids: frozenset = frozenset(),
    ) -> ControlCommand:
        kind = behavior.kind
        if kind in ("stop", "wait"):
            return self._stop(status, ctx)
        ctx.stop_brake = 0.0
        if kind in ("lane_keep", "proceed_through"):
            return self._lane_keep(status, measurements, facts, ctx, unsatisfied_signs, exclude_ids)
        if kind in ("lane_change_left", "lane_change_right"):
            return self._lane_change(kind, status, ctx, tick)
        if kind == "reverse":
            return self._reverse(status, ctx)
        raise InfeasibleBehavior(f"no controller for behavior {kind!r}")

    # longitudinal helpers

    def _accel_to_pedals(self, accel: float) -> tuple[float, float]:
        if accel >= 0.0:
            return min(1.0, accel / self.vehicle.accel_gain), 0.0
        return 0.0, min(1.0, -accel / self.vehicle.brake_gain)

    def _idm_accel(self, status: EgoStatus, leads: list[Lead]) -> float:
        v0 = max(0.5, status.speed_limit)
        accel = kernels.idm_accel(
            max(0.0, status.speed),
            0.0,
            1e12,
            v0,
            self.idm.t_headway,
            self.idm.a_max,
            self.idm.b_comf,
            self.idm.s0,
            self.idm.b_emergency,
        )
        for lead in leads:
            a = kernels.idm_accel(
                max(0.0, status.speed),
                lead.speed,
                max(0.05, lead.net_gap),
                v0,
                self.idm.t_headway,
                self.idm.a_max,
                self.idm.b_comf,
                self.idm.s0,
                self.idm.b_emergency,
            )
            if a < accel:
                accel = a
        return accel

    # behaviors

    def _lane_keep(self, status, measurements, facts, ctx, unsatisfied_signs, exclude_ids) -> ControlCommand:
        lane = self.graph.lane(status.lane_id)
        _, lat, lane_heading = lane.centerline.project(status.x, status.y)
        steer = self._steer_toward(lat, lane_heading, status, ctx)
        leads = idm_leads(
            status,
            measurements,
            facts,
            unsatisfied_signs,
            self.vehicle.half_length,
            exclude_ids,
        )
        throttle, brake = self._accel_to_pedals(self._idm_accel(status, leads))
        ctx.lon_pid.reset()
        return ControlCommand(steer=steer, throttle=throttle, brake=brake)

    def _lane_change(self, kind: str, status: EgoStatus, ctx: StackContext, tick: int) -> ControlCommand:
        state = ctx.lane_change
        if state is None:
            lane = self.graph.lane(status.lane_id)
            target = lane.left_neighbor if kind == "lane_change_left" else lane.right_neighbor
            if target is None:
                raise InfeasibleBehavior(f"{kind} with no neighbor lane from {status.lane_id!r}")
            _, d0, _ = self.graph.lane(target).centerline.project(status.x, status.y)
            state = LaneChangeState(
                target_lane=target,
                start_tick=tick,
                d0=d0,
                speed_target=max(status.speed, self.params.lane_change_speed),
                v0=max(0.0, status.speed),
            )
            ctx.lane_change = state
            ctx.lat_pid.reset()
            ctx.lon_pid.reset()

        lane = self.graph.lane(state.target_lane)
        _, lat, lane_heading = lane.centerline.project(status.x, status.y)
        elapsed = (tick - state.start_tick) * self.dt
        tau = elapsed / self.params.lane_change_duration_s
        if tau > 1.0:
            tau = 1.0
        blend = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau))
        ref = state.d0 * (1.0 - blend)
        steer = self._steer_toward(lat - ref, lane_heading, status, ctx)

        # the speed reference ramps up so the lateral motion leads when the
        # change starts from a standstill right behind a blocker
        ramp = min(1.0, elapsed / self.params.lane_change_ramp_s)
        v_ref = state.v0 + (state.speed_target - state.v0) * ramp
        err = v_ref - status.speed
        u = ctx.lon_pid.step(err, self.params.lon_kp, self.params.lon_ki, self.params.lon_kd, self.dt)
        if u >= 0.0:
            return ControlCommand(steer=steer, throttle=min(1.0, u), brake=0.0)
        return ControlCommand(steer=steer, throttle=0.0, brake=min(1.0, -u))

    def _stop(self, status: EgoStatus, ctx: StackContext) -> ControlCommand:
        lane = self.graph.lane(status.lane_id)
        _, lat, lane_heading = lane.centerline.project(status.x, status.y)
        steer = 0.0 if abs(status.speed) < 0.1 else self._steer_toward(lat, lane_heading, status, ctx)
        ctx.stop_brake = min(1.0, ctx.stop_brake + 2.5 * self.dt)
        ctx.lon_pid.reset()
        return ControlCommand(steer=steer, throttle=0.0, brake=ctx.stop_brake)

    def _reverse(self, status: EgoStatus, ctx: StackContext) -> ControlCommand:
        err = self.params.reverse_speed - abs(min(0.0, status.speed))
        u = ctx.lon_pid.step(err, self.params.lon_kp, self.params.lon_ki, self.params.lon_kd, self.dt)
        if status.speed > 0.2:
            # still rolling forward: brake to a stop before engaging reverse
            return ControlCommand(steer=0.0, throttle=0.0, brake=1.0, reverse=False)
        if u >= 0.0:
            return ControlCommand(steer=0.0, throttle=min(1.0, u), brake=0.0, reverse=True)
        return ControlCommand(steer=0.0, throttle=0.0, brake=min(1.0, -u), reverse=True)

    def _steer_toward(self, lat_error: float, lane_heading: float, status: EgoStatus, ctx: StackContext) -> float:
        heading_err = wrap_angle(lane_heading - status.heading)
        u = ctx.lat_pid.step(lat_error, self.params.lat_kp, self.params.lat_ki, self.params.lat_kd, self.dt)
        steer = -u + self.params.heading_gain * heading_err
        if steer > 1.0:
            steer = 1.0
        elif steer < -1.0:
            steer = -1.0
        return steer
