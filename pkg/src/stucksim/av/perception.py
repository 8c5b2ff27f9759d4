"""Ground-truth perception adapter with range and field-of-view limits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from ..config import ARRIVAL_RADIUS_M, PerceptionConfig, V_MIN_MPS
from ..geometry import wrap_angle
from ..world.types import Actor, WorldState, stable_normal
from .route import RouteState

FULL_STOP_MPS = 0.05


@dataclass(frozen=True)
class ObjectMeasurement:
    actor_id: str
    kind: str
    distance: float               # along-route center distance, >= 0
    lane_relation: str            # ego_lane | left_adjacent | right_adjacent | opposite | other
    velocity: float
    traversable: Optional[bool]   # None when unknown or concealed
    half_len: float
    door_open: bool = False
    sweeps_ego_lane: bool = False
    crossing_toward_ego: bool = False
    lane_id: Optional[str] = None
    s_on_lane: float = 0.0


@dataclass(frozen=True)
class EgoStatus:
    x: float
    y: float
    heading: float
    speed: float
    lane_id: str
    s: float
    stationary_timer: float       # continuous time below the stuck threshold
    stationary_ticks: int
    full_stop_timer: float        # continuous time at a complete stop
    destination_flag: bool
    route_remaining_m: float
    route_total_m: float
    route_lane: str
    speed_limit: float


def _lane_relation(ego_lane, actor_lane_id: Optional[str], graph) -> str:
    if actor_lane_id is None:
        return "other"
    if actor_lane_id == ego_lane.id:
        return "ego_lane"
    if actor_lane_id == ego_lane.left_neighbor:
        return "left_adjacent"
    if actor_lane_id == ego_lane.right_neighbor:
        return "right_adjacent"
    if graph.lane(actor_lane_id).direction != ego_lane.direction:
        return "opposite"
    return "other"


def _sweeps_lane(actor: Actor, lane) -> bool:
    door = actor.door_rect()
    if door is None:
        return False
    (cx, cy, heading), (hl, hw) = door
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            px = cx + sx * hl * math.cos(heading) - sy * hw * math.sin(heading)
            py = cy + sx * hl * math.sin(heading) + sy * hw * math.cos(heading)
            _, lat, _ = lane.centerline.project(px, py)
            if abs(lat) <= lane.width / 2.0:
                return True
    return False


def _crossing_toward(actor: Actor, ego_lane) -> bool:
    if actor.crossing < 0.0 or actor.speed <= 0.0:
        return False
    _, lat, lane_heading = ego_lane.centerline.project(actor.x, actor.y)
    # unit normal pointing from the pedestrian toward the lane centerline
    nx = math.sin(lane_heading) if lat > 0 else -math.sin(lane_heading)
    ny = -math.cos(lane_heading) if lat > 0 else math.cos(lane_heading)
    vx = math.cos(actor.heading) * actor.speed
    vy = math.sin(actor.heading) * actor.speed
    return vx * nx + vy * ny > 0.05 or abs(lat) <= ego_lane.width / 2.0


def perceive(
    world: WorldState,
    config: PerceptionConfig,
    nav: RouteState,
    prev: Optional[EgoStatus],
    speed_limit: float = 8.33,
    v_min: float = V_MIN_MPS,
) -> tuple[list[ObjectMeasurement], EgoStatus]:
    """Measure all actors in range/FOV and roll the ego timers forward."""
    ego = world.ego()
    graph = world.graph
    ego_lane = graph.lane(ego.lane_id)

    measurements: list[ObjectMeasurement] = []
    for actor in world.others():
        dx = actor.x - ego.x
        dy = actor.y - ego.y
        rng = math.hypot(dx, dy)
        if rng > config.range_m:
            continue
        bearing = wrap_angle(math.atan2(dy, dx) - ego.heading)
        if abs(bearing) > config.fov_half_angle_rad:
            continue
        s_on_ego_lane, _, _ = ego_lane.centerline.project(actor.x, actor.y)
        distance = max(0.0, s_on_ego_lane - ego.s)
        velocity = actor.speed
        if config.noise_enabled:
            distance = max(
                0.0,
                distance + config.sigma_distance_m * stable_normal(world.seed, world.tick, f"perc:{actor.id}:d"),
            )
            velocity = velocity + config.sigma_velocity_mps * stable_normal(world.seed, world.tick, f"perc:{actor.id}:v")
        traversable: Optional[bool] = None
        if actor.kind == "static_obstacle":
            traversable = None if actor.conceal_traversable else actor.traversable
        measurements.append(
            ObjectMeasurement(
                actor_id=actor.id,
                kind=actor.kind,
                distance=distance,
                lane_relation=_lane_relation(ego_lane, actor.lane_id, graph),
                velocity=velocity,
                traversable=traversable,
                half_len=actor.half_len,
                door_open=actor.door_open,
                sweeps_ego_lane=actor.door_open and _sweeps_lane(actor, ego_lane),
                crossing_toward_ego=actor.kind == "pedestrian" and _crossing_toward(actor, ego_lane),
                lane_id=actor.lane_id,
                s_on_lane=actor.s,
            )
        )
    measurements.sort(key=lambda m: (m.distance, m.actor_id))

    below = abs(ego.speed) < v_min
    ticks = (prev.stationary_ticks + 1 if prev else 1) if below else 0
    stopped = abs(ego.speed) < FULL_STOP_MPS
    full_stop = (prev.full_stop_timer + world.dt if prev else world.dt) if stopped else 0.0

    dest = nav.route.destination
    arrived = math.hypot(ego.x - dest.x, ego.y - dest.y) <= ARRIVAL_RADIUS_M

    status = EgoStatus(
        x=ego.x,
        y=ego.y,
        heading=ego.heading,
        speed=ego.speed,
        lane_id=ego.lane_id,
        s=ego.s,
        stationary_timer=ticks * world.dt,
        stationary_ticks=ticks,
        full_stop_timer=full_stop,
        destination_flag=arrived,
        route_remaining_m=nav.remaining_m(),
        route_total_m=nav.base_length,
        route_lane=nav.current_lane(),
        speed_limit=speed_limit,
    )
    return measurements, status
