"""Scene observation: structured build from measurements, canonical text form.

The text serialization is line oriented, fixed field order, fixed decimal
widths (1 for meters, 2 for speeds and timers), entries sorted by distance
and truncated at a bound. It parses back to an equal observation.
"""

from __future__ import annotations

from typing import Optional

from ..av.perception import EgoStatus, ObjectMeasurement
from ..av.situation import TrafficFacts
from .types import EgoObs, SceneObservation, TcObs, TpEntry, WzEntry, q1, q2

_TP_TYPE = {"vehicle": "vehicle", "pedestrian": "pedestrian", "static_obstacle": "obstacle"}
_LANE_POS = {
    "ego_lane": "ego",
    "left_adjacent": "left_adjacent",
    "right_adjacent": "right_adjacent",
    "opposite": "opposite",
    "other": "other",
}

STATIONARY_SPEED = 0.1


def classify_intent(m: ObjectMeasurement) -> str:
    if m.door_open:
        return "door_open"
    if m.kind == "pedestrian" and m.crossing_toward_ego:
        return "crossing"
    if abs(m.velocity) < STATIONARY_SPEED:
        return "stationary"
    if m.kind in ("vehicle", "pedestrian"):
        return "proceeding"
    return "unknown"


def build_observation(
    measurements: list[ObjectMeasurement],
    facts: TrafficFacts,
    status: EgoStatus,
    unsatisfied_sign_ids: frozenset[str] = frozenset(),
    max_entries: int = 20,
) -> SceneObservation:
    """Deterministic mapping from one tick's percepts to the observation."""
    tl = facts.light.color if facts.light is not None else None
    ts = tuple(
        f.sign.content
        for f in facts.signs
        if not f.sign.content.startswith("speed_limit") and f.sign.id in unsatisfied_sign_ids
    )
    wz = tuple(
        WzEntry(lane_position=f.lane_relation if f.lane_relation != "ego_lane" else "ego", start_m=q1(f.gap_m), end_m=q1(f.gap_m + (f.zone.s1 - f.zone.s0)))
        for f in facts.zones
        if f.lane_relation != "other"
    )

    ordered = sorted(measurements, key=lambda m: (m.distance, m.actor_id))
    truncated = len(ordered) > max_entries
    entries = []
    for m in ordered[:max_entries]:
        entries.append(
            TpEntry(
                ref_id=m.actor_id,
                type=_TP_TYPE[m.kind],
                lane_position=_LANE_POS[m.lane_relation],
                intent=classify_intent(m),
                distance=q1(m.distance),
                velocity=q2(m.velocity),
                traversable=m.traversable,
            )
        )

    ego = EgoObs(
        speed=q2(status.speed),
        stationary_time=q2(status.stationary_timer),
        destination_flag=status.destination_flag,
        lane=status.lane_id,
        route_remaining_m=q1(status.route_remaining_m),
    )
    return SceneObservation(tc=TcObs(tl=tl, ts=ts, wz=wz), tp=tuple(entries), ego=ego, truncated=truncated)


def _flag(b: bool) -> str:
    return "1" if b else "0"


def _trav(t: Optional[bool]) -> str:
    if t is None:
        return "?"
    return "1" if t else "0"


def serialize_observation(obs: SceneObservation) -> str:
    lines = ["obs v=1"]
    lines.append(
        "ego speed={:.2f} stationary={:.2f} dest={} lane={} route_remaining={:.1f}".format(
            obs.ego.speed,
            obs.ego.stationary_time,
            _flag(obs.ego.destination_flag),
            obs.ego.lane,
            obs.ego.route_remaining_m,
        )
    )
    lines.append(f"tc tl={obs.tc.tl if obs.tc.tl else 'none'}")
    lines.append(f"tc ts={','.join(obs.tc.ts) if obs.tc.ts else 'none'}")
    for wz in obs.tc.wz:
        lines.append(f"tc wz lane={wz.lane_position} start={wz.start_m:.1f} end={wz.end_m:.1f}")
    lines.append(f"tp count={len(obs.tp)} truncated={_flag(obs.truncated)}")
    for e in obs.tp:
        lines.append(
            "tp id={} type={} lane={} intent={} distance={:.1f} velocity={:.2f} traversable={}".format(
                e.ref_id, e.type, e.lane_position, e.intent, e.distance, e.velocity, _trav(e.traversable)
            )
        )
    return "\n".join(lines)


class ObservationParseError(Exception):
    pass


def _fields(line: str, prefix: str) -> dict:
    body = line[len(prefix) :].strip()
    out = {}
    for part in body.split():
        if "=" not in part:
            raise ObservationParseError(f"malformed field {part!r} in line {line!r}")
        k, v = part.split("=", 1)
        out[k] = v
    return out


def parse_observation(text: str) -> SceneObservation:
    """Inverse of serialize_observation for canonical text."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("obs "):
        raise ObservationParseError("missing observation header")
    ego = None
    tl: Optional[str] = None
    ts: tuple[str, ...] = ()
    wz: list[WzEntry] = []
    tp: list[TpEntry] = []
    truncated = False
    for line in lines[1:]:
        if line.startswith("ego "):
            f = _fields(line, "ego ")
            ego = EgoObs(
                speed=float(f["speed"]),
                stationary_time=float(f["stationary"]),
                destination_flag=f["dest"] == "1",
                lane=f["lane"],
                route_remaining_m=float(f["route_remaining"]),
            )
        elif line.startswith("tc tl="):
            val = line[len("tc tl=") :].strip()
            tl = None if val == "none" else val
        elif line.startswith("tc ts="):
            val = line[len("tc ts=") :].strip()
            ts = () if val == "none" else tuple(val.split(","))
        elif line.startswith("tc wz "):
            f = _fields(line, "tc wz ")
            wz.append(WzEntry(lane_position=f["lane"], start_m=float(f["start"]), end_m=float(f["end"])))
        elif line.startswith("tp count="):
            f = _fields(line, "tp ")
            truncated = f["truncated"] == "1"
        elif line.startswith("tp "):
            f = _fields(line, "tp ")
            trav = None if f["traversable"] == "?" else f["traversable"] == "1"
            tp.append(
                TpEntry(
                    ref_id=f["id"],
                    type=f["type"],
                    lane_position=f["lane"],
                    intent=f["intent"],
                    distance=float(f["distance"]),
                    velocity=float(f["velocity"]),
                    traversable=trav,
                )
            )
        else:
            raise ObservationParseError(f"unrecognized line {line!r}")
    if ego is None:
        raise ObservationParseError("missing ego line")
    return SceneObservation(tc=TcObs(tl=tl, ts=ts, wz=tuple(wz)), tp=tuple(tp), ego=ego, truncated=truncated)


def map_digest_line(status: EgoStatus, graph) -> str:
    """Candidate lanes and start points near the ego, one canonical line."""
    lane = graph.lane(status.lane_id)

    def describe(ref: Optional[str]) -> str:
        if ref is None:
            return "-"
        other = graph.lane(ref)
        if other.direction != lane.direction:
            return "-"
        return ref

    return "ego_lane={} ego_s={:.1f} left={} right={}".format(
        status.lane_id, status.s, describe(lane.left_neighbor), describe(lane.right_neighbor)
    )


def parse_map_digest(digest: str) -> dict:
    f = _fields("x " + digest, "x ")
    return {
        "ego_lane": f["ego_lane"],
        "ego_s": float(f["ego_s"]),
        "left": None if f["left"] == "-" else f["left"],
        "right": None if f["right"] == "-" else f["right"],
    }
