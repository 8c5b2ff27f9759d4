"""Perception adapter tests: range/FOV, lane relations, ego timers, noise."""

import json

from stucksim.av.command import ControlCommand
from stucksim.av.perception import perceive
from stucksim.av.route import RouteState, plan_route
from stucksim.config import PerceptionConfig
from stucksim.world.scenario import load_bundled, parse_scenario
from stucksim.world.sim import step


def make_world(extra_actors=(), lanes=None, ego_speed=0.0, ego_s=5.0):
    doc = {
        "meta": {"name": "t", "category": "free_flow"},
        "map": {
            "lanes": lanes
            or [
                {"id": "a", "centerline": [[0.0, 3.5], [200.0, 3.5]], "width": 3.5, "right_neighbor": "b"},
                {"id": "b", "centerline": [[0.0, 0.0], [200.0, 0.0]], "width": 3.5, "left_neighbor": "a"},
            ]
        },
        "actors": [{"id": "ego", "kind": "ego", "lane": "b", "s": ego_s, "speed": ego_speed}] + list(extra_actors),
        "route": {"start": {"lane": "b", "s": ego_s}, "destination": {"lane": "b", "s": 190.0}},
    }
    return parse_scenario(json.dumps(doc))


def nav_for(sc):
    return RouteState(plan_route(sc.world.graph, sc.route.start, sc.route.destination), sc.world.graph)


def test_lead_vehicle_measured_with_ground_truth():
    sc = make_world([{"id": "lead", "kind": "vehicle", "lane": "b", "s": 23.0, "speed": 0.0}])
    ms, _ = perceive(sc.world, PerceptionConfig(), nav_for(sc), None)
    assert len(ms) == 1
    m = ms[0]
    assert m.kind == "vehicle"
    assert m.lane_relation == "ego_lane"
    assert abs(m.distance - 18.0) < 1e-9
    assert m.velocity == 0.0


def test_out_of_range_actor_omitted():
    sc = make_world([{"id": "far", "kind": "vehicle", "lane": "b", "s": 120.0, "speed": 0.0}])
    ms, _ = perceive(sc.world, PerceptionConfig(range_m=60.0), nav_for(sc), None)
    assert ms == []


def test_behind_actor_outside_fov():
    sc = make_world([{"id": "rear", "kind": "vehicle", "lane": "b", "s": 40.0, "speed": 0.0}], ego_s=60.0)
    sc2 = make_world([{"id": "rear", "kind": "vehicle", "lane": "b", "s": 40.0, "speed": 0.0}], ego_s=60.0)
    ms, _ = perceive(sc.world, PerceptionConfig(), nav_for(sc2), None)
    assert ms == []


def test_adjacent_lane_relations():
    sc = make_world([{"id": "v", "kind": "vehicle", "lane": "a", "s": 30.0, "speed": 2.0}])
    ms, _ = perceive(sc.world, PerceptionConfig(), nav_for(sc), None)
    assert ms[0].lane_relation == "left_adjacent"


def test_opposite_lane_relation():
    lanes = [
        {"id": "b", "centerline": [[0.0, 0.0], [200.0, 0.0]], "width": 3.5},
        {"id": "o", "centerline": [[200.0, 3.5], [0.0, 3.5]], "width": 3.5, "direction": "opposite"},
    ]
    sc = make_world([{"id": "v", "kind": "vehicle", "lane": "o", "s": 160.0, "speed": 3.0}], lanes=lanes)
    ms, _ = perceive(sc.world, PerceptionConfig(), nav_for(sc), None)
    assert ms and ms[0].lane_relation == "opposite"


def test_stationary_timer_accumulates_25_ticks():
    sc = make_world(ego_speed=0.0)
    world = sc.world
    nav = nav_for(sc)
    prev = None
    for _ in range(25):
        _, prev = perceive(world, PerceptionConfig(), nav, prev)
        world = step(world, ControlCommand())
    assert prev.stationary_ticks == 25
    assert abs(prev.stationary_timer - 1.25) < 1e-9


def test_timer_resets_above_threshold():
    sc = make_world(ego_speed=0.0)
    world = sc.world
    nav = nav_for(sc)
    prev = None
    for _ in range(10):
        _, prev = perceive(world, PerceptionConfig(), nav, prev)
        world = step(world, ControlCommand())
    assert prev.stationary_ticks == 10
    for _ in range(20):
        world = step(world, ControlCommand(throttle=1.0))
    _, status = perceive(world, PerceptionConfig(), nav, prev)
    assert status.stationary_ticks == 0


def test_destination_flag_within_radius():
    sc = make_world(ego_s=188.5)
    _, status = perceive(sc.world, PerceptionConfig(), nav_for(sc), None)
    assert status.destination_flag
    sc2 = make_world(ego_s=185.0)
    _, status2 = perceive(sc2.world, PerceptionConfig(), nav_for(sc2), None)
    assert not status2.destination_flag


def test_noise_off_is_exact_and_on_is_deterministic():
    actor = {"id": "lead", "kind": "vehicle", "lane": "b", "s": 30.0, "speed": 4.0}
    sc = make_world([actor])
    nav = nav_for(sc)
    clean1, _ = perceive(sc.world, PerceptionConfig(), nav, None)
    clean2, _ = perceive(sc.world, PerceptionConfig(), nav, None)
    assert clean1 == clean2
    noisy1, _ = perceive(sc.world, PerceptionConfig(noise_enabled=True), nav, None)
    noisy2, _ = perceive(sc.world, PerceptionConfig(noise_enabled=True), nav, None)
    assert noisy1 == noisy2  # counter-based stream
    assert noisy1[0].distance != clean1[0].distance


def test_concealed_traversable_reports_unknown():
    sc = load_bundled("traversable_debris")
    nav = RouteState(plan_route(sc.world.graph, sc.route.start, sc.route.destination), sc.world.graph)
    ms, _ = perceive(sc.world, PerceptionConfig(), nav, None)
    bag = next(m for m in ms if m.actor_id == "bag")
    assert bag.traversable is None


def test_door_sweep_detected():
    sc = load_bundled("open_door")
    world = step(sc.world, ControlCommand())
    nav = RouteState(plan_route(world.graph, sc.route.start, sc.route.destination), world.graph)
    ms, _ = perceive(world, PerceptionConfig(), nav, None)
    sedan = next(m for m in ms if m.actor_id == "sedan")
    assert sedan.door_open and sedan.sweeps_ego_lane
    assert sedan.lane_relation == "right_adjacent"
