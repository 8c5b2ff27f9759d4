"""Fixed-timestep world advancement and contact detection.

``step`` is a pure function of (state, ego command): identical inputs yield
bit-identical successor states, which the replay verifier relies on.
"""

from __future__ import annotations

import math
from dataclasses import replace

from .. import kernels
from ..av.command import ControlCommand
from ..config import VehicleParams
from ..geometry import rect_overlap
from .types import Actor, Contact, LaneGraph, WorldState

_DEFAULT_VEHICLE = VehicleParams()


def _trigger_fires(trigger, t: float, ego: Actor, actor: Actor) -> bool:
    if trigger.at_t is not None:
        return t >= trigger.at_t
    if trigger.at_ego_range is not None:
        dx = ego.x - actor.x
        dy = ego.y - actor.y
        return dx * dx + dy * dy <= trigger.at_ego_range * trigger.at_ego_range
    return False


def _advance_scripted(actor: Actor, ego: Actor, graph: LaneGraph, t: float, dt: float) -> Actor:
    speed = actor.speed
    door_open = actor.door_open
    crossing = actor.crossing
    heading = actor.heading
    fired = list(actor.fired) if actor.fired else [False] * len(actor.triggers)

    cross_trigger = None
    for i, trig in enumerate(actor.triggers):
        if trig.kind == "cross" and (fired[i] or crossing >= 0.0):
            cross_trigger = trig
        if fired[i]:
            continue
        if _trigger_fires(trig, t, ego, actor):
            fired[i] = True
            if trig.kind == "set_speed":
                speed = trig.speed
            elif trig.kind == "open_door":
                door_open = True
            elif trig.kind == "cross":
                cross_trigger = trig
                crossing = 0.0
                speed = trig.speed
                lane_heading = actor.heading
                if actor.lane_id is not None:
                    _, _, lane_heading = graph.lane(actor.lane_id).centerline.project(actor.x, actor.y)
                side = math.pi / 2.0 if trig.direction == "left" else -math.pi / 2.0
                heading = lane_heading + side

    x, y, s, lane_id = actor.x, actor.y, actor.s, actor.lane_id

    if cross_trigger is not None and 0.0 <= crossing < cross_trigger.distance:
        dp = speed * dt
        remaining = cross_trigger.distance - crossing
        if dp >= remaining:
            dp = remaining
        x += math.cos(heading) * dp
        y += math.sin(heading) * dp
        crossing += dp
        if crossing >= cross_trigger.distance:
            speed = 0.0
        lane_id, s, _ = graph.nearest_lane(x, y)
    elif actor.kind in ("vehicle", "pedestrian") and speed > 0.0 and lane_id is not None:
        s += speed * dt
        lane = graph.lane(lane_id)
        while s > lane.length:
            if lane.successors:
                s -= lane.length
                lane_id = lane.successors[0]
                lane = graph.lane(lane_id)
            else:
                s = lane.length
                speed = 0.0
                break
        x, y, heading = lane.centerline.point_at(s)

    return replace(
        actor,
        x=x,
        y=y,
        heading=heading,
        speed=speed,
        lane_id=lane_id,
        s=s,
        door_open=door_open,
        crossing=crossing,
        fired=tuple(fired),
    )


def step(world: WorldState, ego_cmd: ControlCommand, vehicle: VehicleParams = _DEFAULT_VEHICLE) -> WorldState:
    """Advance one tick: ego by bicycle kinematics, scripted actors by script."""
    ego = world.ego()
    t = world.t
    nx, ny, nh, nv = kernels.bicycle_step(
        ego.x,
        ego.y,
        ego.heading,
        ego.speed,
        ego_cmd.steer,
        ego_cmd.throttle,
        ego_cmd.brake,
        ego_cmd.reverse,
        world.dt,
        vehicle.wheelbase_m,
        vehicle.steer_max_rad,
        vehicle.accel_gain,
        vehicle.brake_gain,
        vehicle.v_max_fwd,
        vehicle.v_max_rev,
    )
    lane_id, s, _ = world.graph.nearest_lane(nx, ny)
    new_ego = replace(ego, x=nx, y=ny, heading=nh, speed=nv, lane_id=lane_id, s=s)

    actors = []
    for actor in world.actors:
        if actor.kind == "ego":
            actors.append(new_ego)
        elif actor.kind == "static_obstacle" and not actor.triggers:
            actors.append(actor)
        else:
            actors.append(_advance_scripted(actor, ego, world.graph, t, world.dt))

    return world.with_actors(tuple(actors), tick=world.tick + 1)


_CONTACT_KIND = {
    "pedestrian": "collision_pedestrian",
    "vehicle": "collision_vehicle",
    "static_obstacle": "collision_static",
}


def collisions(world: WorldState) -> list[Contact]:
    """Instantaneous ego contacts; traversable obstacles yield traversal."""
    ego = world.ego()
    out: list[Contact] = []
    for other in world.others():
        hit = rect_overlap(ego.pose, ego.half_extent, other.pose, other.half_extent)
        if not hit and other.door_open:
            door = other.door_rect()
            if door is not None:
                hit = rect_overlap(ego.pose, ego.half_extent, door[0], door[1])
        if not hit:
            continue
        if other.kind == "static_obstacle" and other.traversable:
            out.append(Contact(other.id, "traversal"))
        else:
            out.append(Contact(other.id, _CONTACT_KIND[other.kind]))
    return out


class ContactTracker:
    """Turns per-tick contacts into one event per contiguous contact episode."""

    def __init__(self):
        self._active: set[str] = set()

    def update(self, tick: int, contacts: list[Contact]) -> list[tuple[int, Contact]]:
        now = {c.actor_id for c in contacts}
        new_events = [(tick, c) for c in contacts if c.actor_id not in self._active]
        self._active = now
        return new_events
