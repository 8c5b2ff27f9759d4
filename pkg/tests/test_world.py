"""World model tests: scenario loading, stepping, lights, collisions."""

import json
import math

import pytest

from stucksim.av.command import ControlCommand
from stucksim.config import DT_S
from stucksim.world.scenario import load_bundled, parse_scenario
from stucksim.world.sim import ContactTracker, collisions, step
from stucksim.world.types import ScenarioError, TrafficLight, stable_uniform


def minimal_doc(**overrides):
    doc = {
        "meta": {"name": "t", "category": "free_flow"},
        "map": {"lanes": [{"id": "b", "centerline": [[0.0, 0.0], [100.0, 0.0]], "width": 3.5}]},
        "actors": [{"id": "ego", "kind": "ego", "lane": "b", "s": 5.0, "speed": 0.0}],
        "route": {"start": {"lane": "b", "s": 5.0}, "destination": {"lane": "b", "s": 90.0}},
    }
    doc.update(overrides)
    return doc


def test_load_bundled_open_door():
    sc = load_bundled("open_door")
    sedan = next(a for a in sc.world.actors if a.id == "sedan")
    assert sedan.lane_id == "r"
    assert sedan.speed == 0.0
    assert any(t.kind == "open_door" and t.at_t == 0.0 for t in sedan.triggers)


def test_degenerate_route_destination_at_start():
    doc = minimal_doc(actors=[], route={"start": {"lane": "b", "s": 5.0}, "destination": {"lane": "b", "s": 5.0}})
    sc = parse_scenario(json.dumps(doc))
    ego = sc.world.ego()
    dx = math.hypot(ego.x - 5.0, ego.y - 0.0)
    assert dx < 1e-9
    # arrival radius covers the start pose immediately
    assert sc.route.start == sc.route.destination


def test_plastic_bag_scenario_shape():
    sc = load_bundled("plastic_bag")
    lead = next(a for a in sc.world.actors if a.id == "lead")
    bag = next(a for a in sc.world.actors if a.id == "bag")
    assert any(t.kind == "set_speed" and t.speed == 0.0 for t in lead.triggers)
    assert bag.traversable and bag.lane_id == "a"


def test_schema_violation_reports_path():
    doc = minimal_doc()
    doc["map"]["lanes"][0]["width"] = -1
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(json.dumps(doc))
    assert "width" in str(exc.value)


def test_dangling_lane_reference():
    doc = minimal_doc()
    doc["actors"][0]["lane"] = "zz"
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(json.dumps(doc))
    assert "dangling" in str(exc.value)


def test_asymmetric_neighbors_rejected():
    doc = minimal_doc()
    doc["map"]["lanes"] = [
        {"id": "a", "centerline": [[0, 3.5], [100, 3.5]], "width": 3.5, "right_neighbor": "b"},
        {"id": "b", "centerline": [[0, 0], [100, 0]], "width": 3.5},
    ]
    with pytest.raises(ScenarioError):
        parse_scenario(json.dumps(doc))


def test_overlapping_spawns_rejected():
    doc = minimal_doc()
    doc["actors"].append({"id": "v1", "kind": "vehicle", "lane": "b", "s": 6.0, "speed": 0.0})
    with pytest.raises(ScenarioError) as exc:
        parse_scenario(json.dumps(doc))
    assert "overlapping" in str(exc.value)


def test_step_zero_command_advances_time_only():
    sc = parse_scenario(json.dumps(minimal_doc()))
    w0 = sc.world
    w1 = step(w0, ControlCommand())
    assert w1.tick == w0.tick + 1
    assert abs(w1.t - (w0.t + DT_S)) < 1e-12
    e0, e1 = w0.ego(), w1.ego()
    assert (e0.x, e0.y, e0.heading, e0.speed) == (e1.x, e1.y, e1.heading, e1.speed)


def test_step_bit_identical():
    sc = load_bundled("plastic_bag", seed=3)
    cmd = ControlCommand(steer=0.1, throttle=0.6)
    a = step(step(sc.world, cmd), cmd)
    b = step(step(sc.world, cmd), cmd)
    assert a.digest() == b.digest()


def test_time_monotone_no_skips():
    sc = parse_scenario(json.dumps(minimal_doc()))
    w = sc.world
    for i in range(50):
        w = step(w, ControlCommand(throttle=0.5))
        assert w.tick == i + 1


def test_light_phase_boundary_half_open():
    light = TrafficLight(id="l", lane_ids=("b",), lane_id="b", s=50.0, schedule=(("red", 10.0), ("green", 10.0)))
    assert light.phase_at(0.0) == "red"
    assert light.phase_at(9.999) == "red"
    assert light.phase_at(10.0) == "green"
    assert light.phase_at(19.999) == "green"
    assert light.phase_at(20.0) == "red"


def test_scripted_breakdown_trigger():
    sc = load_bundled("plastic_bag", seed=0)
    w = sc.world
    for _ in range(int(6.0 / DT_S)):
        w = step(w, ControlCommand())
    lead = next(a for a in w.actors if a.id == "lead")
    assert lead.speed == 0.0
    assert 54.0 <= lead.s <= 56.0  # 30 + 5 m/s * 5 s


def test_crossing_pedestrian_moves_and_stops():
    sc = load_bundled("pedestrian_crossing", seed=0)
    w = sc.world
    ped0 = next(a for a in w.actors if a.id == "ped1")
    for _ in range(int(12.0 / DT_S)):
        w = step(w, ControlCommand())
    ped = next(a for a in w.actors if a.id == "ped1")
    assert ped.crossing >= 6.9 - 1e-9
    assert ped.speed == 0.0
    assert ped.y > ped0.y  # walked left across the road


def test_scripted_actors_stay_on_lane_graph():
    for name in ("plastic_bag", "pedestrian_crossing", "lead_queue"):
        sc = load_bundled(name, seed=0)
        w = sc.world
        for _ in range(400):
            w = step(w, ControlCommand())
            for actor in w.others():
                best = min(
                    abs(w.graph.lane(lid).centerline.project(actor.x, actor.y)[1]) for lid in w.graph.lanes
                )
                width = max(l.width for l in w.graph.lanes.values())
                assert best <= width / 2 + 1e-6, f"{actor.id} off the lane graph in {name}"


def test_collisions_empty_when_far():
    sc = parse_scenario(json.dumps(minimal_doc()))
    assert collisions(sc.world) == []


def test_collision_with_pedestrian_rect():
    doc = minimal_doc()
    doc["actors"].append({"id": "p", "kind": "pedestrian", "lane": "b", "s": 7.5, "speed": 0.0})
    # spawn overlap check triggers first; craft the overlap by stepping instead
    doc["actors"][-1]["s"] = 12.0
    sc = parse_scenario(json.dumps(doc))
    w = sc.world
    for _ in range(60):
        w = step(w, ControlCommand(throttle=1.0))
        hits = collisions(w)
        if hits:
            assert hits[0].kind == "collision_pedestrian"
            break
    else:
        pytest.fail("never reached the pedestrian")


def test_traversable_obstacle_yields_traversal():
    doc = minimal_doc()
    doc["actors"].append(
        {
            "id": "bag",
            "kind": "static_obstacle",
            "lane": "b",
            "s": 12.0,
            "half_extent": [0.4, 0.5],
            "traversable": True,
        }
    )
    sc = parse_scenario(json.dumps(doc))
    w = sc.world
    kinds = set()
    for _ in range(80):
        w = step(w, ControlCommand(throttle=1.0))
        for c in collisions(w):
            kinds.add(c.kind)
    assert kinds == {"traversal"}


def test_door_rect_collides_when_open():
    sc = load_bundled("open_door", seed=0)
    w = step(sc.world, ControlCommand())  # door opens at t=0 trigger
    sedan = next(a for a in w.actors if a.id == "sedan")
    assert sedan.door_open
    rect = sedan.door_rect()
    assert rect is not None
    (cx, cy, _), _ = rect
    assert cy > sedan.y  # door swings to the vehicle's left


def test_contact_tracker_dedup_per_episode():
    tracker = ContactTracker()
    from stucksim.world.types import Contact

    c = Contact("x", "collision_vehicle")
    assert tracker.update(1, [c]) == [(1, c)]
    assert tracker.update(2, [c]) == []  # same contiguous episode
    assert tracker.update(3, []) == []
    assert tracker.update(4, [c]) == [(4, c)]  # new episode


def test_stable_uniform_is_order_free():
    a = stable_uniform(7, 100, "perc:x:d")
    b = stable_uniform(7, 100, "perc:y:d")
    assert a == stable_uniform(7, 100, "perc:x:d")
    assert a != b
    assert 0.0 <= a < 1.0
