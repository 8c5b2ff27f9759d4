"""Shared extraction of traffic-control facts and car-following leads."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from ..world.types import Sign, TrafficControlState, TrafficLight, WorkZone
from .perception import EgoStatus, ObjectMeasurement


@dataclass(frozen=True)
class LightFact:
    light: TrafficLight
    color: str
    gap_m: float          # ego front bumper to stop line


@dataclass(frozen=True)
class SignFact:
    sign: Sign
    gap_m: float


@dataclass(frozen=True)
class ZoneFact:
    zone: WorkZone
    gap_m: float          # to zone start; negative while inside
    lane_relation: str    # ego_lane | left_adjacent | right_adjacent | other


@dataclass(frozen=True)
class TrafficFacts:
    light: Optional[LightFact] = None
    signs: tuple[SignFact, ...] = ()
    zones: tuple[ZoneFact, ...] = ()

    def ego_zones(self) -> tuple[ZoneFact, ...]:
        return tuple(z for z in self.zones if z.lane_relation == "ego_lane")


def traffic_facts(
    t: float,
    control: TrafficControlState,
    status: EgoStatus,
    graph,
    lookahead_m: float,
    ego_half_len: float,
) -> TrafficFacts:
    """Traffic control elements relevant to the ego's current lane."""
    ego_lane = graph.lane(status.lane_id)

    light_fact: Optional[LightFact] = None
    for light in control.lights:
        if status.lane_id not in light.lane_ids:
            continue
        s_on, _, _ = graph.lane(light.lane_id).centerline.project(status.x, status.y)
        gap = light.s - s_on - ego_half_len
        if gap < -2.0 or gap > lookahead_m:
            continue
        if light_fact is None or gap < light_fact.gap_m:
            light_fact = LightFact(light=light, color=light.phase_at(t), gap_m=gap)

    signs = []
    for sign in control.signs:
        if sign.lane_id != status.lane_id:
            continue
        gap = sign.s - status.s - ego_half_len
        if -2.0 <= gap <= lookahead_m:
            signs.append(SignFact(sign=sign, gap_m=gap))
    signs.sort(key=lambda f: f.gap_m)

    zones = []
    for zone in control.work_zones:
        if zone.lane_id == status.lane_id:
            relation = "ego_lane"
        elif zone.lane_id == ego_lane.left_neighbor:
            relation = "left_adjacent"
        elif zone.lane_id == ego_lane.right_neighbor:
            relation = "right_adjacent"
        else:
            relation = "other"
        s_on, _, _ = graph.lane(zone.lane_id).centerline.project(status.x, status.y)
        if zone.s1 <= s_on:
            continue  # fully behind
        gap = zone.s0 - s_on - ego_half_len
        if gap > lookahead_m:
            continue
        zones.append(ZoneFact(zone=zone, gap_m=gap, lane_relation=relation))
    zones.sort(key=lambda f: f.gap_m)

    return TrafficFacts(light=light_fact, signs=tuple(signs), zones=tuple(zones))


def light_is_blocking(fact: Optional[LightFact]) -> bool:
    return fact is not None and fact.color in ("red", "yellow") and fact.gap_m >= 0.0


@dataclass(frozen=True)
class Lead:
    net_gap: float
    speed: float
    source: str


def idm_leads(
    status: EgoStatus,
    measurements: list[ObjectMeasurement],
    facts: TrafficFacts,
    unsatisfied_sign_ids: frozenset[str],
    ego_half_len: float,
    exclude_ids: frozenset[str] = frozenset(),
) -> list[Lead]:
    """Real and virtual leads the longitudinal controller must respect."""
    leads: list[Lead] = []
    for m in measurements:
        if m.actor_id in exclude_ids:
            continue
        in_path = m.lane_relation == "ego_lane" or m.sweeps_ego_lane
        if not in_path:
            continue
        if m.distance <= 0.05:
            continue
        net = m.distance - m.half_len - ego_half_len
        leads.append(Lead(net_gap=net, speed=max(0.0, m.velocity), source=f"actor:{m.actor_id}"))
    if light_is_blocking(facts.light):
        leads.append(Lead(net_gap=facts.light.gap_m, speed=0.0, source=f"light:{facts.light.light.id}"))
    for f in facts.signs:
        if f.sign.id in unsatisfied_sign_ids and f.gap_m >= 0.0:
            leads.append(Lead(net_gap=f.gap_m, speed=0.0, source=f"sign:{f.sign.id}"))
    for f in facts.ego_zones():
        leads.append(Lead(net_gap=f.gap_m, speed=0.0, source=f"zone:{f.zone.lane_id}"))
    return leads


def stationary_blockers(
    measurements: list[ObjectMeasurement],
    blocker_speed: float,
    exclude_ids: frozenset[str] = frozenset(),
) -> list[ObjectMeasurement]:
    """Objects the conservative baseline refuses to pass: anything stopped in
    the ego lane (traversable or not) plus anything sweeping into it."""
    out = []
    for m in measurements:
        if m.actor_id in exclude_ids:
            continue
        in_path = m.lane_relation == "ego_lane" or m.sweeps_ego_lane
        if not in_path:
            continue
        if m.kind == "pedestrian":
            out.append(m)
        elif abs(m.velocity) < blocker_speed:
            out.append(m)
    return out


def speed_limit_for(lane_id: str, s: float, control: TrafficControlState, lane_limit: float) -> float:
    """Lane limit, lowered by any speed-limit sign already passed."""
    v0 = lane_limit
    for sign in control.signs:
        if sign.lane_id == lane_id and sign.content.startswith("speed_limit:") and sign.s <= s:
            v0 = min(v0, float(sign.content.split(":", 1)[1]))
    return v0


def euclid(ax: float, ay: float, bx: float, by: float) -> float:
    return math.hypot(ax - bx, ay - by)
