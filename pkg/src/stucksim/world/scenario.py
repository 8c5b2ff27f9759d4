"""Scenario documents: schema validation, cross-reference checks, loading."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import jsonschema

from ..config import DT_S
from ..geometry import Polyline, rect_overlap
from .types import (
    Actor,
    Lane,
    LaneGraph,
    ScenarioError,
    Sign,
    TrafficControlState,
    TrafficLight,
    Trigger,
    WorkZone,
    WorldState,
)

CATEGORIES = (
    "construction",
    "parked_obstacle",
    "open_door",
    "traversable_debris",
    "pedestrian_crossing",
    "red_light",
    "free_flow",
)

_WAYPOINT = {
    "type": "object",
    "required": ["lane", "s"],
    "properties": {"lane": {"type": "string"}, "s": {"type": "number", "minimum": 0}},
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["meta", "map", "actors", "route"],
    "properties": {
        "meta": {
            "type": "object",
            "required": ["name", "category"],
            "properties": {
                "name": {"type": "string", "minLength": 1},
                "category": {"enum": list(CATEGORIES)},
            },
            "additionalProperties": False,
        },
        "map": {
            "type": "object",
            "required": ["lanes"],
            "properties": {
                "lanes": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["id", "centerline", "width"],
                        "properties": {
                            "id": {"type": "string", "minLength": 1},
                            "centerline": {
                                "type": "array",
                                "minItems": 2,
                                "items": {
                                    "type": "array",
                                    "minItems": 2,
                                    "maxItems": 2,
                                    "items": {"type": "number"},
                                },
                            },
                            "width": {"type": "number", "exclusiveMinimum": 0},
                            "direction": {"enum": ["forward", "opposite"]},
                            "left_neighbor": {"type": ["string", "null"]},
                            "right_neighbor": {"type": ["string", "null"]},
                            "successors": {"type": "array", "items": {"type": "string"}},
                            "speed_limit": {"type": "number", "exclusiveMinimum": 0},
                        },
                        "additionalProperties": False,
                    },
                }
            },
            "additionalProperties": False,
        },
        "actors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "lane", "s"],
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "kind": {"enum": ["ego", "vehicle", "pedestrian", "static_obstacle"]},
                    "lane": {"type": "string"},
                    "s": {"type": "number", "minimum": 0},
                    "speed": {"type": "number", "minimum": 0},
                    "lateral_offset": {"type": "number"},
                    "half_extent": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 2,
                        "items": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "traversable": {"type": "boolean"},
                    "conceal_traversable": {"type": "boolean"},
                },
                "additionalProperties": False,
            },
        },
        "traffic_control": {
            "type": "object",
            "properties": {
                "lights": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["id", "lane", "s", "schedule"],
                        "properties": {
                            "id": {"type": "string"},
                            "lane": {"type": "string"},
                            "s": {"type": "number", "minimum": 0},
                            "controlled_lanes": {"type": "array", "items": {"type": "string"}},
                            "schedule": {
                                "type": "array",
                                "minItems": 1,
                                "items": {
                                    "type": "array",
                                    "minItems": 2,
                                    "maxItems": 2,
                                    "prefixItems": [
                                        {"enum": ["red", "yellow", "green"]},
                                        {"type": "number", "exclusiveMinimum": 0},
                                    ],
                                },
                            },
                        },
                        "additionalProperties": False,
                    },
                },
                "signs": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["id", "lane", "s", "content"],
                        "properties": {
                            "id": {"type": "string"},
                            "lane": {"type": "string"},
                            "s": {"type": "number", "minimum": 0},
                            "content": {"type": "string", "pattern": "^(stop|yield|speed_limit:[0-9.]+)$"},
                        },
                        "additionalProperties": False,
                    },
                },
                "work_zones": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["lane", "s0", "s1"],
                        "properties": {
                            "lane": {"type": "string"},
                            "s0": {"type": "number", "minimum": 0},
                            "s1": {"type": "number", "exclusiveMinimum": 0},
                        },
                        "additionalProperties": False,
                    },
                },
            },
            "additionalProperties": False,
        },
        "route": {
            "type": "object",
            "required": ["start", "destination"],
            "properties": {"start": _WAYPOINT, "destination": _WAYPOINT},
            "additionalProperties": False,
        },
        "triggers": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["actor", "type"],
                "properties": {
                    "actor": {"type": "string"},
                    "type": {"enum": ["set_speed", "open_door", "cross"]},
                    "at_t": {"type": "number", "minimum": 0},
                    "at_ego_range": {"type": "number", "exclusiveMinimum": 0},
                    "speed": {"type": "number", "minimum": 0},
                    "direction": {"enum": ["left", "right"]},
                    "distance": {"type": "number", "exclusiveMinimum": 0},
                },
                "additionalProperties": False,
            },
        },
        "expected": {"type": "object"},
    },
    "additionalProperties": False,
}

_DEFAULT_HALF_EXTENT = {
    "ego": (2.4, 1.0),
    "vehicle": (2.4, 1.0),
    "pedestrian": (0.3, 0.3),
    "static_obstacle": (0.5, 0.5),
}


@dataclass(frozen=True)
class RouteSpec:
    start: tuple[str, float]
    destination: tuple[str, float]


@dataclass(frozen=True)
class Scenario:
    name: str
    category: str
    world: WorldState
    route: RouteSpec
    expected: dict
    lane_speed_limits: dict


def _validate_schema(doc: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: e.json_path)
    if errors:
        err = errors[0]
        raise ScenarioError(err.json_path, err.message)


def parse_scenario(text: str, seed: int = 0) -> Scenario:
    """Parse and fully resolve a scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"not valid JSON: {exc}") from None
    _validate_schema(doc)

    lanes = []
    speed_limits = {}
    for entry in doc["map"]["lanes"]:
        try:
            line = Polyline(entry["centerline"])
        except ValueError as exc:
            raise ScenarioError(f"map.lanes[{entry['id']}].centerline", str(exc)) from None
        lanes.append(
            Lane(
                id=entry["id"],
                centerline=line,
                width=float(entry["width"]),
                direction=entry.get("direction", "forward"),
                left_neighbor=entry.get("left_neighbor"),
                right_neighbor=entry.get("right_neighbor"),
                successors=tuple(entry.get("successors", ())),
            )
        )
        speed_limits[entry["id"]] = float(entry.get("speed_limit", 8.33))
    graph = LaneGraph(lanes)

    triggers_by_actor: dict[str, list[Trigger]] = {}
    for i, trig in enumerate(doc.get("triggers", [])):
        if trig["actor"] not in {a["id"] for a in doc["actors"]}:
            raise ScenarioError(f"triggers[{i}].actor", f"unknown actor {trig['actor']!r}")
        if trig.get("at_t") is None and trig.get("at_ego_range") is None:
            raise ScenarioError(f"triggers[{i}]", "needs at_t or at_ego_range")
        if trig["type"] == "cross" and not trig.get("distance"):
            raise ScenarioError(f"triggers[{i}]", "cross trigger needs a distance")
        triggers_by_actor.setdefault(trig["actor"], []).append(
            Trigger(
                kind=trig["type"],
                at_t=trig.get("at_t"),
                at_ego_range=trig.get("at_ego_range"),
                speed=float(trig.get("speed", 0.0)),
                direction=trig.get("direction", "left"),
                distance=float(trig.get("distance", 0.0)),
            )
        )

    actors = []
    ego_count = 0
    seen_ids = set()
    for i, spec in enumerate(doc["actors"]):
        if spec["id"] in seen_ids:
            raise ScenarioError(f"actors[{i}].id", f"duplicate actor id {spec['id']!r}")
        seen_ids.add(spec["id"])
        if spec["lane"] not in graph.lanes:
            raise ScenarioError(f"actors[{i}].lane", f"dangling lane reference {spec['lane']!r}")
        lane = graph.lane(spec["lane"])
        s = float(spec["s"])
        if s > lane.length:
            raise ScenarioError(f"actors[{i}].s", f"beyond lane end ({lane.length:.1f} m)")
        x, y, heading = lane.centerline.point_at(s)
        lateral = float(spec.get("lateral_offset", 0.0))
        if lateral:
            x += -math.sin(heading) * lateral
            y += math.cos(heading) * lateral
        kind = spec["kind"]
        if kind == "ego":
            ego_count += 1
        half = tuple(spec.get("half_extent", _DEFAULT_HALF_EXTENT[kind]))
        traversable = bool(spec.get("traversable", False))
        if traversable and kind != "static_obstacle":
            raise ScenarioError(f"actors[{i}].traversable", "only static obstacles may be traversable")
        trigs = tuple(triggers_by_actor.get(spec["id"], ()))
        actors.append(
            Actor(
                id=spec["id"],
                kind=kind,
                x=x,
                y=y,
                heading=heading,
                speed=float(spec.get("speed", 0.0)),
                lane_id=spec["lane"],
                s=s,
                half_len=float(half[0]),
                half_wid=float(half[1]),
                traversable=traversable,
                conceal_traversable=bool(spec.get("conceal_traversable", False)),
                triggers=trigs,
                fired=tuple(False for _ in trigs),
            )
        )
    if ego_count == 0:
        # degenerate scenarios may omit the ego; spawn it at the route start
        lane = graph.lane(doc["route"]["start"]["lane"])
        s = float(doc["route"]["start"]["s"])
        x, y, heading = lane.centerline.point_at(s)
        half = _DEFAULT_HALF_EXTENT["ego"]
        actors.append(
            Actor(
                id="ego",
                kind="ego",
                x=x,
                y=y,
                heading=heading,
                speed=0.0,
                lane_id=lane.id,
                s=s,
                half_len=half[0],
                half_wid=half[1],
            )
        )
    elif ego_count > 1:
        raise ScenarioError("actors", f"expected exactly one ego actor, found {ego_count}")

    for i, a in enumerate(actors):
        for b in actors[i + 1 :]:
            if rect_overlap(a.pose, a.half_extent, b.pose, b.half_extent):
                raise ScenarioError("actors", f"overlapping spawn poses: {a.id!r} and {b.id!r}")

    tc = doc.get("traffic_control", {})
    lights = []
    for i, entry in enumerate(tc.get("lights", [])):
        if entry["lane"] not in graph.lanes:
            raise ScenarioError(f"traffic_control.lights[{i}].lane", "dangling lane reference")
        controlled = tuple(entry.get("controlled_lanes", [entry["lane"]]))
        for ref in controlled:
            if ref not in graph.lanes:
                raise ScenarioError(f"traffic_control.lights[{i}].controlled_lanes", "dangling lane reference")
        lights.append(
            TrafficLight(
                id=entry["id"],
                lane_ids=controlled,
                lane_id=entry["lane"],
                s=float(entry["s"]),
                schedule=tuple((c, float(d)) for c, d in entry["schedule"]),
            )
        )
    signs = []
    for i, entry in enumerate(tc.get("signs", [])):
        if entry["lane"] not in graph.lanes:
            raise ScenarioError(f"traffic_control.signs[{i}].lane", "dangling lane reference")
        signs.append(Sign(id=entry["id"], lane_id=entry["lane"], s=float(entry["s"]), content=entry["content"]))
    zones = []
    for i, entry in enumerate(tc.get("work_zones", [])):
        if entry["lane"] not in graph.lanes:
            raise ScenarioError(f"traffic_control.work_zones[{i}].lane", "dangling lane reference")
        if not entry["s1"] > entry["s0"]:
            raise ScenarioError(f"traffic_control.work_zones[{i}]", "s1 must exceed s0")
        zones.append(WorkZone(lane_id=entry["lane"], s0=float(entry["s0"]), s1=float(entry["s1"])))

    route = doc["route"]
    for key in ("start", "destination"):
        if route[key]["lane"] not in graph.lanes:
            raise ScenarioError(f"route.{key}.lane", "dangling lane reference")

    world = WorldState(
        tick=0,
        dt=DT_S,
        actors=tuple(actors),
        control=TrafficControlState(lights=tuple(lights), signs=tuple(signs), work_zones=tuple(zones)),
        seed=seed,
        graph=graph,
    )
    return Scenario(
        name=doc["meta"]["name"],
        category=doc["meta"]["category"],
        world=world,
        route=RouteSpec(
            start=(route["start"]["lane"], float(route["start"]["s"])),
            destination=(route["destination"]["lane"], float(route["destination"]["s"])),
        ),
        expected=doc.get("expected", {}),
        lane_speed_limits=speed_limits,
    )


def load_scenario(path: str | Path, seed: int = 0) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"), seed=seed)


def bundled_names() -> list[str]:
    root = resources.files("stucksim") / "scenarios"
    return sorted(p.name[: -len(".scn")] for p in root.iterdir() if p.name.endswith(".scn"))


def load_bundled(name: str, seed: int = 0) -> Scenario:
    root = resources.files("stucksim") / "scenarios"
    f = root / f"{name}.scn"
    if not f.is_file():
        raise ScenarioError("scenario", f"no bundled scenario named {name!r}")
    return parse_scenario(f.read_text(encoding="utf-8"), seed=seed)


def resolve_scenario(name_or_path: str, seed: int = 0) -> Scenario:
    """Accept either a bundled name or a filesystem path."""
    p = Path(name_or_path)
    if p.suffix == ".scn" and p.exists():
        return load_scenario(p, seed=seed)
    return load_bundled(name_or_path, seed=seed)


def with_seed(scenario: Scenario, seed: int) -> Scenario:
    return replace(scenario, world=replace(scenario.world, seed=seed))
