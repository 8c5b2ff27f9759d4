"""World domain types: lane graph, actors, traffic control, tick state."""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field, replace
from typing import Optional

from ..geometry import Polyline

EGO_ID = "ego"

ACTOR_KINDS = ("ego", "vehicle", "pedestrian", "static_obstacle")
LANE_DIRECTIONS = ("forward", "opposite")

# Extra footprint an open door adds on the vehicle's left side.
DOOR_WIDTH_M = 0.9
DOOR_LENGTH_M = 1.1


class ScenarioError(Exception):
    """Scenario document failed validation (carries a path and a message)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True)
class Lane:
    id: str
    centerline: Polyline
    width: float
    direction: str = "forward"
    left_neighbor: Optional[str] = None
    right_neighbor: Optional[str] = None
    successors: tuple[str, ...] = ()

    @property
    def length(self) -> float:
        return self.centerline.length


class LaneGraph:
    """Static road network. Immutable after construction."""

    def __init__(self, lanes: list[Lane]):
        self.lanes: dict[str, Lane] = {lane.id: lane for lane in lanes}
        if len(self.lanes) != len(lanes):
            raise ScenarioError("map.lanes", "duplicate lane id")
        self._validate()

    def _validate(self) -> None:
        for lane in self.lanes.values():
            for ref, label in (
                (lane.left_neighbor, "left_neighbor"),
                (lane.right_neighbor, "right_neighbor"),
            ):
                if ref is not None and ref not in self.lanes:
                    raise ScenarioError(f"map.lanes[{lane.id}].{label}", f"dangling lane reference {ref!r}")
            for ref in lane.successors:
                if ref not in self.lanes:
                    raise ScenarioError(f"map.lanes[{lane.id}].successors", f"dangling lane reference {ref!r}")
            if lane.direction not in LANE_DIRECTIONS:
                raise ScenarioError(f"map.lanes[{lane.id}].direction", f"unknown direction {lane.direction!r}")
        # neighbor symmetry among same-direction lanes
        for lane in self.lanes.values():
            left = lane.left_neighbor
            if left is not None:
                other = self.lanes[left]
                if other.direction == lane.direction and other.right_neighbor != lane.id:
                    raise ScenarioError(
                        f"map.lanes[{lane.id}].left_neighbor",
                        f"asymmetric neighbor link with {left!r}",
                    )
            right = lane.right_neighbor
            if right is not None:
                other = self.lanes[right]
                if other.direction == lane.direction and other.left_neighbor != lane.id:
                    raise ScenarioError(
                        f"map.lanes[{lane.id}].right_neighbor",
                        f"asymmetric neighbor link with {right!r}",
                    )

    def lane(self, lane_id: str) -> Lane:
        try:
            return self.lanes[lane_id]
        except KeyError:
            raise ScenarioError("lane", f"dangling lane reference {lane_id!r}") from None

    def nearest_lane(self, x: float, y: float) -> tuple[str, float, float]:
        """(lane id, s, |lateral|) of the lane whose centerline is closest."""
        best = None
        for lane_id in sorted(self.lanes):
            s, lat, _ = self.lanes[lane_id].centerline.project(x, y)
            key = abs(lat)
            if best is None or key < best[2]:
                best = (lane_id, s, key)
        assert best is not None
        return best

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for lane_id in sorted(self.lanes):
            lane = self.lanes[lane_id]
            h.update(lane_id.encode())
            h.update(lane.direction.encode())
            h.update(struct.pack("<d", lane.width))
            h.update(lane.centerline.xs.tobytes())
            h.update(lane.centerline.ys.tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class Trigger:
    kind: str                      # set_speed | open_door | cross
    at_t: Optional[float] = None
    at_ego_range: Optional[float] = None
    speed: float = 0.0             # set_speed target, or crossing walk speed
    direction: str = "left"        # crossing direction relative to lane heading
    distance: float = 0.0          # crossing length


@dataclass(frozen=True)
class Actor:
    id: str
    kind: str
    x: float
    y: float
    heading: float
    speed: float
    lane_id: Optional[str]
    s: float
    half_len: float
    half_wid: float
    traversable: bool = False
    conceal_traversable: bool = False
    door_open: bool = False
    crossing: float = -1.0                 # progress m; negative = not crossing
    triggers: tuple[Trigger, ...] = ()
    fired: tuple[bool, ...] = ()

    @property
    def pose(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.heading)

    @property
    def half_extent(self) -> tuple[float, float]:
        return (self.half_len, self.half_wid)

    def door_rect(self) -> Optional[tuple[tuple[float, float, float], tuple[float, float]]]:
        """Footprint of the open door (attached on the left side)."""
        if not self.door_open:
            return None
        off = self.half_wid + DOOR_WIDTH_M / 2.0
        cx = self.x - off * math.sin(self.heading)
        cy = self.y + off * math.cos(self.heading)
        return ((cx, cy, self.heading), (DOOR_LENGTH_M / 2.0, DOOR_WIDTH_M / 2.0))


@dataclass(frozen=True)
class TrafficLight:
    id: str
    lane_ids: tuple[str, ...]
    lane_id: str                   # stop-line lane
    s: float                       # stop-line arc length
    schedule: tuple[tuple[str, float], ...]

    def phase_at(self, t: float) -> str:
        total = 0.0
        for _, dur in self.schedule:
            total += dur
        r = math.fmod(t, total)
        if r < 0.0:
            r += total
        acc = 0.0
        for color, dur in self.schedule:
            if acc <= r < acc + dur:
                return color
            acc += dur
        return self.schedule[-1][0]


@dataclass(frozen=True)
class Sign:
    id: str
    lane_id: str
    s: float
    content: str                   # stop | yield | speed_limit:<v>


@dataclass(frozen=True)
class WorkZone:
    lane_id: str
    s0: float
    s1: float


@dataclass(frozen=True)
class TrafficControlState:
    lights: tuple[TrafficLight, ...] = ()
    signs: tuple[Sign, ...] = ()
    work_zones: tuple[WorkZone, ...] = ()


@dataclass(frozen=True)
class Contact:
    """Instantaneous overlap between the ego and another actor."""

    actor_id: str
    kind: str  # collision_pedestrian | collision_vehicle | collision_static | traversal


@dataclass(frozen=True)
class WorldState:
    tick: int
    dt: float
    actors: tuple[Actor, ...]
    control: TrafficControlState
    seed: int
    graph: LaneGraph = field(compare=False)

    @property
    def t(self) -> float:
        return self.tick * self.dt

    def ego(self) -> Actor:
        for actor in self.actors:
            if actor.kind == "ego":
                return actor
        raise LookupError("world has no ego actor")

    def others(self) -> tuple[Actor, ...]:
        return tuple(a for a in self.actors if a.kind != "ego")

    def with_actors(self, actors: tuple[Actor, ...], tick: Optional[int] = None) -> "WorldState":
        return replace(self, actors=actors, tick=self.tick if tick is None else tick)

    def digest(self) -> str:
        """Deterministic fingerprint of the dynamic state."""
        h = hashlib.sha256()
        h.update(struct.pack("<qd", self.tick, self.dt))
        h.update(struct.pack("<q", self.seed))
        for a in sorted(self.actors, key=lambda a: a.id):
            h.update(a.id.encode())
            h.update(a.kind.encode())
            h.update(
                struct.pack(
                    "<dddddd",
                    a.x,
                    a.y,
                    a.heading,
                    a.speed,
                    a.s,
                    a.crossing,
                )
            )
            h.update((a.lane_id or "").encode())
            h.update(bytes([a.door_open, a.traversable]))
            h.update(bytes(1 if f else 0 for f in a.fired))
        return h.hexdigest()[:32]


def stable_uniform(seed: int, tick: int, consumer: str) -> float:
    """Counter-based uniform in [0, 1): independent of call order."""
    digest = hashlib.sha256(f"{seed}:{tick}:{consumer}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def stable_normal(seed: int, tick: int, consumer: str) -> float:
    """Counter-based standard normal (Box-Muller)."""
    u1 = stable_uniform(seed, tick, consumer + ":u1")
    u2 = stable_uniform(seed, tick, consumer + ":u2")
    if u1 <= 0.0:
        u1 = 5e-324
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
