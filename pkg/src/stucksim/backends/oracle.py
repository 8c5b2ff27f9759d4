"""Deterministic rule backend.

Encodes the recovery reasoning as a total decision table over the parsed
observation: traffic control first, then yielding, then ego-lane blockage
with maneuver selection, with guidance directives steering the maneuver
choice without bypassing the lane-clearance safety rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from ..av.command import Behavior
from ..guidance import GuidanceInterpretation, interpret_keywords
from ..recovery.observation import parse_map_digest, parse_observation
from ..recovery.types import AnalysisResult, RecoveryPlan, SceneObservation, TpEntry
from .base import ReasoningRequest, ReasoningResponse

V_MIN = 1.25
HOLD_S = 1.0
CLEAR_MARGIN_M = 15.0
BLOCKER_RANGE_M = 30.0
PED_YIELD_RANGE_M = 15.0
DOOR_RANGE_M = 20.0
WAIT_S = 5.0
REVERSE_M = 5.0


@dataclass(frozen=True)
class _Blocker:
    category: str          # work_zone | vehicle | obstacle | pedestrian | door
    distance: float
    entry: Optional[TpEntry] = None
    side: Optional[str] = None  # for door: which adjacent lane the vehicle is in


def _passable_ids(obs: SceneObservation, guided_passable: bool) -> frozenset[str]:
    """Obstacle entries a plan may drive over.

    Known-traversable obstacles always qualify; with an explicit guidance
    assertion, unknown-traversability obstacles qualify too. Entries the
    perception marks solid stay solid.
    """
    out = set()
    for e in obs.tp:
        if e.type != "obstacle":
            continue
        if e.traversable is True:
            out.add(e.ref_id)
        elif e.traversable is None and guided_passable:
            out.add(e.ref_id)
    return frozenset(out)


def _nearest_blocker(obs: SceneObservation, passable: frozenset[str]) -> Optional[_Blocker]:
    candidates: list[_Blocker] = []
    for wz in obs.tc.wz:
        if wz.lane_position == "ego" and wz.start_m <= BLOCKER_RANGE_M and wz.end_m > 0.0:
            candidates.append(_Blocker("work_zone", max(0.0, wz.start_m)))
    for e in obs.tp:
        if e.lane_position == "ego" and e.distance <= BLOCKER_RANGE_M:
            if e.type == "vehicle" and e.intent in ("stationary", "door_open"):
                candidates.append(_Blocker("vehicle", e.distance, e))
            elif e.type == "obstacle":
                candidates.append(_Blocker("obstacle", e.distance, e))
            elif e.type == "pedestrian" and e.intent == "stationary":
                candidates.append(_Blocker("pedestrian", e.distance, e))
        elif (
            e.type == "vehicle"
            and e.intent == "door_open"
            and e.lane_position in ("left_adjacent", "right_adjacent")
            and e.distance <= DOOR_RANGE_M
        ):
            candidates.append(_Blocker("door", e.distance, e, side=e.lane_position))
    if not candidates:
        return None
    return min(candidates, key=lambda b: b.distance)


def _lane_clear(obs: SceneObservation, side: str, passable: frozenset[str]) -> bool:
    """No non-passable occupant observed within the clearance window."""
    for e in obs.tp:
        if e.lane_position != side:
            continue
        if e.distance > CLEAR_MARGIN_M:
            continue
        if e.ref_id in passable:
            continue
        return False
    return True


def _target_has_passable(obs: SceneObservation, side: str, passable: frozenset[str]) -> bool:
    return any(
        e.lane_position == side and e.ref_id in passable and e.distance <= BLOCKER_RANGE_M for e in obs.tp
    )


def _none_response(cause: str, raw: dict, events: tuple[str, ...] = ()) -> ReasoningResponse:
    analysis = AnalysisResult(immobilized=0, cause=cause)
    raw = dict(raw, analysis=analysis.to_json(), output=None)
    return ReasoningResponse(analysis=analysis, output=None, raw=json.dumps(raw), events=events)


def _plan_response(
    cause: str,
    plan: RecoveryPlan,
    raw: dict,
    events: tuple[str, ...] = (),
) -> ReasoningResponse:
    analysis = AnalysisResult(immobilized=1, cause=cause)
    raw = dict(raw, analysis=analysis.to_json(), output=plan.to_json())
    return ReasoningResponse(analysis=analysis, output=plan, raw=json.dumps(raw), events=events)


def _change_plan(
    obs: SceneObservation,
    digest: dict,
    side_lane_pos: str,
    blocker: Optional[_Blocker],
    passable: frozenset[str],
    reason: str,
) -> RecoveryPlan:
    kind = "lane_change_left" if side_lane_pos == "left_adjacent" else "lane_change_right"
    items = [Behavior(kind)]
    if _target_has_passable(obs, side_lane_pos, passable):
        items.append(Behavior("proceed_through"))
    items.append(Behavior("lane_keep"))
    target_lane = digest["left"] if side_lane_pos == "left_adjacent" else digest["right"]
    replanning = blocker is not None and blocker.category in ("work_zone", "vehicle", "obstacle", "pedestrian") and not (
        blocker.entry is not None and blocker.entry.intent == "door_open"
    )
    return RecoveryPlan(
        behavior_plan=tuple(items),
        reason=reason,
        route_replanning=replanning,
        route_start_point=(target_lane, digest["ego_s"]) if replanning else None,
    )


class RuleOracle:
    name = "oracle"

    def __call__(self, request: ReasoningRequest) -> ReasoningResponse:
        obs = parse_observation(request.observation_text)
        digest = parse_map_digest(request.map_digest)
        guidance: Optional[GuidanceInterpretation] = None
        if request.guidance_text:
            guidance = interpret_keywords(request.guidance_text)
        raw_base = {
            "backend": self.name,
            "guidance": request.guidance_text,
            "branch": "guided" if request.guidance_text else "autonomous",
        }

        # trip finished or not actually held below threshold: nothing to solve
        if obs.ego.destination_flag:
            return _none_response("none", raw_base)
        if abs(obs.ego.speed) >= V_MIN or obs.ego.stationary_time < HOLD_S:
            return _none_response("none", raw_base)

        # 1. traffic control influencing the ego lane
        if obs.tc.tl in ("red", "yellow") or any(s in ("stop", "yield") for s in obs.tc.ts):
            return _none_response("traffic_control", raw_base)

        # 2. yielding to traffic participants
        if any(
            e.type == "pedestrian" and e.intent == "crossing" and e.distance <= PED_YIELD_RANGE_M
            for e in obs.tp
        ):
            return _none_response("yielding", raw_base)
        ego_lane_entries = [e for e in obs.tp if e.lane_position == "ego"]
        if ego_lane_entries:
            nearest = min(ego_lane_entries, key=lambda e: e.distance)
            if nearest.type == "vehicle" and nearest.intent == "proceeding":
                return _none_response("yielding", raw_base)

        # 3. ego-lane blockage
        guided_verbs = {d.verb for d in guidance.directives} if guidance and guidance.confidence == "matched" else set()
        guided_passable = bool(guided_verbs & {"proceed_over", "ignore_obstacle"})
        passable = _passable_ids(obs, guided_passable)
        blocker = _nearest_blocker(obs, passable)

        if blocker is None:
            plan = RecoveryPlan(behavior_plan=(Behavior("lane_keep"),), reason="no visible cause; resume driving")
            return _plan_response("unknown", plan, raw_base)

        sides_available = {
            "left_adjacent": digest["left"],
            "right_adjacent": digest["right"],
        }

        # guided maneuver choice
        if guided_verbs:
            events: tuple[str, ...] = ()
            change_verb = next(
                (d.verb for d in guidance.directives if d.verb in ("change_lane_left", "change_lane_right")), None
            )
            if change_verb is not None:
                side = "left_adjacent" if change_verb == "change_lane_left" else "right_adjacent"
                if sides_available[side] is not None and _lane_clear(obs, side, passable):
                    plan = _change_plan(obs, digest, side, blocker, passable, "passenger directed lane change")
                    return _plan_response("blocked_ego_lane", plan, raw_base)
                events = ("guidance_rejected",)
                plan = RecoveryPlan(
                    behavior_plan=(Behavior("wait", duration_s=WAIT_S),),
                    reason="directed lane is not clear; waiting",
                )
                return _plan_response("blocked_ego_lane", plan, raw_base, events)
            if guided_passable and blocker.entry is not None and blocker.entry.ref_id in passable:
                plan = RecoveryPlan(
                    behavior_plan=(Behavior("proceed_through"), Behavior("lane_keep")),
                    reason="passenger confirmed the obstacle is traversable",
                )
                return _plan_response("blocked_ego_lane", plan, raw_base)
            if "wait" in guided_verbs:
                plan = RecoveryPlan(behavior_plan=(Behavior("wait", duration_s=WAIT_S),), reason="passenger asked to wait")
                return _plan_response("blocked_ego_lane", plan, raw_base)
            if "reverse" in guided_verbs:
                plan = RecoveryPlan(
                    behavior_plan=(Behavior("reverse", distance_m=REVERSE_M),),
                    reason="passenger asked to back up",
                )
                return _plan_response("blocked_ego_lane", plan, raw_base)
            # guided but no actionable directive for this scene: fall through

        # autonomous maneuver choice
        if blocker.entry is not None and blocker.entry.ref_id in passable:
            plan = RecoveryPlan(
                behavior_plan=(Behavior("proceed_through"), Behavior("lane_keep")),
                reason="blocking obstacle is traversable",
            )
            return _plan_response("blocked_ego_lane", plan, raw_base)

        order = ["left_adjacent", "right_adjacent"]
        if blocker.category == "door" and blocker.side == "left_adjacent":
            order = ["right_adjacent", "left_adjacent"]
        for side in order:
            if sides_available[side] is not None and _lane_clear(obs, side, passable):
                plan = _change_plan(obs, digest, side, blocker, passable, f"ego lane blocked by {blocker.category}")
                return _plan_response("blocked_ego_lane", plan, raw_base)

        plan = RecoveryPlan(
            behavior_plan=(Behavior("wait", duration_s=WAIT_S),),
            reason="all adjacent lanes occupied; waiting",
        )
        return _plan_response("blocked_all_lanes", plan, raw_base)


rule_oracle = RuleOracle()
