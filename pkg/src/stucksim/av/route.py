"""Waypoint route planning over the lane graph.

The planner searches a per-lane grid of waypoints (2 m spacing). Lane
changes cost a fixed 5 m penalty on top of traveled distance; ties break on
lexicographic lane id. Callers may pass blocked intervals (observed work
zones or static blockers) which the search avoids when an alternative
exists.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

from ..config import LANE_CHANGE_PENALTY_M, WAYPOINT_SPACING_M
from ..world.types import LaneGraph

AVOID_MARGIN_M = 5.0
AVOID_COST = 1e6


class NoRoute(Exception):
    pass


@dataclass(frozen=True)
class Waypoint:
    lane_id: str
    s: float
    x: float
    y: float


class Route:
    """Planned waypoint sequence with cumulative progress distances."""

    def __init__(self, waypoints: list[Waypoint]):
        if not waypoints:
            raise NoRoute("empty route")
        self.waypoints = waypoints
        self.cum: list[float] = [0.0]
        for prev, cur in zip(waypoints, waypoints[1:]):
            d = math.hypot(cur.x - prev.x, cur.y - prev.y)
            self.cum.append(self.cum[-1] + d)

    @property
    def length(self) -> float:
        return self.cum[-1]

    @property
    def destination(self) -> Waypoint:
        return self.waypoints[-1]

    def lane_sequence(self) -> list[str]:
        seq = []
        for wp in self.waypoints:
            if not seq or seq[-1] != wp.lane_id:
                seq.append(wp.lane_id)
        return seq


def _grid(graph: LaneGraph, lane_id: str) -> list[float]:
    length = graph.lane(lane_id).length
    n = int(length // WAYPOINT_SPACING_M)
    ss = [i * WAYPOINT_SPACING_M for i in range(n + 1)]
    if ss[-1] < length:
        ss.append(length)
    return ss


def _snap_index(ss: list[float], s: float) -> int:
    best = 0
    best_d = abs(ss[0] - s)
    for i, v in enumerate(ss):
        d = abs(v - s)
        if d < best_d:
            best, best_d = i, d
    return best


def plan_route(
    graph: LaneGraph,
    start: tuple[str, float],
    destination: tuple[str, float],
    avoid: tuple[tuple[str, float, float], ...] = (),
) -> Route:
    """Minimum-cost waypoint path from start to destination.

    Raises NoRoute when the destination is not reachable.
    """
    for lane_id, _ in (start, destination):
        if lane_id not in graph.lanes:
            raise NoRoute(f"waypoint on unknown lane {lane_id!r}")

    grids = {lane_id: _grid(graph, lane_id) for lane_id in graph.lanes}

    def blocked(lane_id: str, s: float) -> bool:
        for zone_lane, s0, s1 in avoid:
            if zone_lane == lane_id and s0 - AVOID_MARGIN_M <= s <= s1 + AVOID_MARGIN_M:
                return True
        return False

    def neighbors(node):
        lane_id, k = node
        lane = graph.lane(lane_id)
        ss = grids[lane_id]
        out = []
        if k + 1 < len(ss):
            out.append(((lane_id, k + 1), ss[k + 1] - ss[k]))
        else:
            for succ in lane.successors:
                out.append(((succ, 0), 0.0))
        for ref in (lane.left_neighbor, lane.right_neighbor):
            if ref is None:
                continue
            other = graph.lane(ref)
            if other.direction != lane.direction:
                continue
            tss = grids[ref]
            target_s = ss[k] + WAYPOINT_SPACING_M
            j = _snap_index(tss, target_s)
            if tss[j] < ss[k]:
                continue
            out.append(((ref, j), (tss[j] - ss[k]) + LANE_CHANGE_PENALTY_M))
        return out

    start_node = (start[0], _snap_index(grids[start[0]], start[1]))
    goal_node = (destination[0], _snap_index(grids[destination[0]], destination[1]))

    dist: dict = {start_node: 0.0}
    prev: dict = {}
    heap = [(0.0, start_node)]
    settled = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        if node == goal_node:
            break
        for nxt, cost in neighbors(node):
            lane_id, k = nxt
            edge = cost + (AVOID_COST if blocked(lane_id, grids[lane_id][k]) else 0.0)
            nd = d + edge
            old = dist.get(nxt, math.inf)
            if nd < old:
                dist[nxt] = nd
                prev[nxt] = node
                heapq.heappush(heap, (nd, nxt))
            elif nd == old and nxt in prev:
                # equal cost: prefer staying in the target's own lane, which
                # places lane changes at the earliest legal point
                if node[0] == lane_id and prev[nxt][0] != lane_id:
                    prev[nxt] = node

    if goal_node not in settled:
        raise NoRoute(f"destination {destination} unreachable from {start}")

    nodes = [goal_node]
    while nodes[-1] != start_node:
        nodes.append(prev[nodes[-1]])
    nodes.reverse()

    waypoints = []
    for lane_id, k in nodes:
        s = grids[lane_id][k]
        x, y, _ = graph.lane(lane_id).centerline.point_at(s)
        waypoints.append(Waypoint(lane_id, s, x, y))
    return Route(waypoints)


class RouteState:
    """Monotone progress tracker along an active route (owned by the loop)."""

    def __init__(self, route: Route, graph: LaneGraph, base_length: float | None = None):
        self.route = route
        self.graph = graph
        self.cursor = 0
        # total used for progress accounting; preserved across replanning
        self.base_length = route.length if base_length is None else base_length

    def advance(self, x: float, y: float) -> None:
        wps = self.route.waypoints
        while self.cursor + 1 < len(wps):
            nxt = wps[self.cursor + 1]
            lane = self.graph.lane(nxt.lane_id)
            s, _, _ = lane.centerline.project(x, y)
            if s >= nxt.s - 0.05:
                self.cursor += 1
            else:
                break

    def remaining_m(self) -> float:
        return self.route.length - self.route.cum[self.cursor]

    def current_lane(self) -> str:
        return self.route.waypoints[self.cursor].lane_id

    def upcoming_transition(self, lookahead_m: float) -> str | None:
        """'left' or 'right' when the route moves to a neighbor lane soon."""
        wps = self.route.waypoints
        here = wps[self.cursor]
        lane = self.graph.lane(here.lane_id)
        i = self.cursor
        dist = 0.0
        while i + 1 < len(wps) and dist <= lookahead_m:
            dist = self.route.cum[i + 1] - self.route.cum[self.cursor]
            nxt = wps[i + 1]
            if nxt.lane_id != here.lane_id:
                if nxt.lane_id == lane.left_neighbor:
                    return "left"
                if nxt.lane_id == lane.right_neighbor:
                    return "right"
                return None  # successor continuation, no maneuver
            i += 1
        return None

    def swap(self, new_route: Route) -> None:
        """Install a replanned route, keeping destination-distance accounting."""
        progressed = self.base_length - self.remaining_m()
        self.route = new_route
        self.cursor = 0
        self.base_length = progressed + new_route.length
