"""Rule-based decision module and the behavior-plan override hook.

While an override plan is installed the baseline rules never run; the plan's
items execute in order and complete on geometric or temporal conditions.
The baseline itself is deliberately conservative: every stopped object in
the ego lane is a blocker regardless of traversability, and there is no
self-initiated replanning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from ..config import DecisionParams, VehicleParams, V_MIN_MPS
from ..world.types import LaneGraph
from .command import Behavior, LANE_KEEP, STOP
from .control import StackContext
from .perception import EgoStatus, ObjectMeasurement, FULL_STOP_MPS
from .route import RouteState
from .situation import TrafficFacts, light_is_blocking, stationary_blockers


@dataclass
class OverrideState:
    """Progress of an installed behavior plan."""

    items: tuple[Behavior, ...]
    plan_id: str
    clear_points: tuple[tuple[str, float], ...] = ()
    exclude_ids: frozenset = frozenset()
    index: int = 0
    item_active: bool = False
    wait_elapsed: float = 0.0
    reverse_origin: Optional[tuple[float, float]] = None
    proceed_clear: Optional[tuple[str, float]] = None
    rolling_time: float = 0.0
    done: bool = False
    failed: bool = False

    def current(self) -> Optional[Behavior]:
        if self.index < len(self.items):
            return self.items[self.index]
        return None


def _passed(graph: LaneGraph, status: EgoStatus, lane_id: str, s_clear: float) -> bool:
    s, _, _ = graph.lane(lane_id).centerline.project(status.x, status.y)
    return s > s_clear


def _resolve_proceed_clear(
    status: EgoStatus,
    measurements: list[ObjectMeasurement],
    ego_half_len: float,
    margin: float,
) -> Optional[tuple[str, float]]:
    best = None
    for m in measurements:
        if m.lane_relation != "ego_lane" or m.lane_id is None:
            continue
        if m.kind != "static_obstacle":
            continue
        if best is None or m.distance < best.distance:
            best = m
    if best is None:
        return None
    return (best.lane_id, best.s_on_lane + best.half_len + ego_half_len + margin)


class DecisionModule:
    def __init__(self, graph: LaneGraph, params: DecisionParams, vehicle: VehicleParams, dt: float):
        self.graph = graph
        self.params = params
        self.vehicle = vehicle
        self.dt = dt

    # override plan progression

    def _override_behavior(
        self,
        ov: OverrideState,
        status: EgoStatus,
        measurements: list[ObjectMeasurement],
        ctx: StackContext,
    ) -> Optional[Behavior]:
        while True:
            item = ov.current()
            if item is None:
                ov.done = True
                return None
            if not ov.item_active:
                ov.item_active = True
                ov.wait_elapsed = 0.0
                ov.rolling_time = 0.0
                ov.reverse_origin = None
                if item.kind == "proceed_through":
                    ov.proceed_clear = _resolve_proceed_clear(
                        status, measurements, self.vehicle.half_length, self.params.route_change_lookahead_m / 5.0
                    )
            if self._item_complete(item, ov, status, ctx):
                ov.index += 1
                ov.item_active = False
                if item.kind in ("lane_change_left", "lane_change_right"):
                    ctx.lane_change = None
                continue
            self._item_tick(item, ov, status)
            return item

    def _item_complete(self, item: Behavior, ov: OverrideState, status: EgoStatus, ctx: StackContext) -> bool:
        kind = item.kind
        if kind in ("lane_change_left", "lane_change_right"):
            state = ctx.lane_change
            if state is None:
                return False
            _, lat, _ = self.graph.lane(state.target_lane).centerline.project(status.x, status.y)
            return abs(lat) < 0.2
        if kind == "wait":
            return ov.wait_elapsed >= item.duration_s
        if kind == "stop":
            return abs(status.speed) < FULL_STOP_MPS
        if kind == "reverse":
            if ov.reverse_origin is None:
                return False
            ox, oy = ov.reverse_origin
            return math.hypot(status.x - ox, status.y - oy) >= item.distance_m
        if kind == "proceed_through":
            if ov.proceed_clear is None:
                return ov.rolling_time >= 1.0
            lane_id, s_clear = ov.proceed_clear
            return _passed(self.graph, status, lane_id, s_clear)
        if kind == "lane_keep":
            if ov.rolling_time < 1.0:
                return False
            for lane_id, s_clear in ov.clear_points:
                if not _passed(self.graph, status, lane_id, s_clear):
                    return False
            return True
        return True

    def _item_tick(self, item: Behavior, ov: OverrideState, status: EgoStatus) -> None:
        if item.kind == "wait":
            ov.wait_elapsed += self.dt
        if item.kind in ("lane_keep", "proceed_through"):
            if abs(status.speed) >= V_MIN_MPS:
                ov.rolling_time += self.dt
            else:
                ov.rolling_time = 0.0
        if item.kind == "reverse" and ov.reverse_origin is None and status.speed <= FULL_STOP_MPS:
            ov.reverse_origin = (status.x, status.y)

    # baseline rules

    def _stop_sources(
        self,
        status: EgoStatus,
        measurements: list[ObjectMeasurement],
        facts: TrafficFacts,
        ctx: StackContext,
    ) -> set[str]:
        p = self.params
        envelope = p.standoff_m + status.speed * status.speed / (2.0 * self.vehicle.brake_gain)
        active: set[str] = set()

        if light_is_blocking(facts.light):
            key = f"light:{facts.light.light.id}"
            if facts.light.gap_m < envelope or (key in ctx.latches and facts.light.gap_m < p.release_gap_m):
                active.add(key)

        for f in facts.signs:
            sign = f.sign
            if sign.content.startswith("speed_limit"):
                continue
            if sign.id in ctx.satisfied_signs:
                continue
            need = p.sign_stop_duration_s if sign.content == "stop" else 0.5
            if f.gap_m <= p.sign_zone_m and abs(status.speed) < FULL_STOP_MPS:
                held = ctx.sign_hold.get(sign.id, 0.0) + self.dt
                ctx.sign_hold[sign.id] = held
                if held >= need:
                    ctx.satisfied_signs.add(sign.id)
                    continue
            if 0.0 <= f.gap_m < envelope or (f"sign:{sign.id}" in ctx.latches and f.gap_m < p.release_gap_m):
                active.add(f"sign:{sign.id}")

        for f in facts.ego_zones():
            key = f"zone:{f.zone.lane_id}:{f.zone.s0:.0f}"
            if f.gap_m < envelope or key in ctx.latches:
                active.add(key)

        for m in stationary_blockers(measurements, p.blocker_speed_mps):
            key = f"actor:{m.actor_id}"
            net = m.distance - m.half_len - self.vehicle.half_length
            latched = key in ctx.latches and net < p.release_gap_m and abs(m.velocity) < p.moving_release_mps
            if net < envelope or latched:
                active.add(key)

        ctx.latches = active
        return active

    def decide(
        self,
        status: EgoStatus,
        measurements: list[ObjectMeasurement],
        facts: TrafficFacts,
        nav: RouteState,
        ctx: StackContext,
        override: Optional[OverrideState] = None,
    ) -> Behavior:
        if override is not None and not override.done and not override.failed:
            behavior = self._override_behavior(override, status, measurements, ctx)
            if behavior is not None:
                return behavior

        if self._stop_sources(status, measurements, facts, ctx):
            ctx.lane_change = None
            return STOP

        # finish a baseline-initiated change first
        if ctx.lane_change is not None:
            state = ctx.lane_change
            _, lat, _ = self.graph.lane(state.target_lane).centerline.project(status.x, status.y)
            if abs(lat) < 0.2:
                ctx.lane_change = None
            else:
                lane = self.graph.lane(status.lane_id)
                if state.target_lane == lane.left_neighbor:
                    return Behavior("lane_change_left")
                if state.target_lane == lane.right_neighbor:
                    return Behavior("lane_change_right")
                return Behavior("lane_change_left" if state.d0 < 0 else "lane_change_right")

        # rejoin or anticipate the route lane
        lane = self.graph.lane(status.lane_id)
        target: Optional[str] = None
        if status.route_lane != status.lane_id:
            target = status.route_lane
        else:
            ahead = nav.upcoming_transition(self.params.route_change_lookahead_m)
            if ahead == "left":
                target = lane.left_neighbor
            elif ahead == "right":
                target = lane.right_neighbor
        if target is not None:
            if target == lane.left_neighbor:
                return Behavior("lane_change_left")
            if target == lane.right_neighbor:
                return Behavior("lane_change_right")

        return LANE_KEEP
