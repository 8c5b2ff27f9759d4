"""Closed-loop execution of one scenario: the per-tick orchestration.

Writes a lossless trace: header, one tick line per tick (state digest,
command, ego state), reasoning records, events, and a final line. Replay
and scoring both consume this file.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .. import __version__
from ..av.command import STOP, ControlCommand
from ..av.control import Controller, InfeasibleBehavior, StackContext
from ..av.decision import DecisionModule
from ..av.perception import EgoStatus, perceive
from ..av.route import RouteState, plan_route
from ..av.situation import euclid, speed_limit_for, traffic_facts
from ..config import RunConfig
from ..guidance import GuidanceMessage, GuidanceQueue
from ..recovery.coordinator import RecoveryCoordinator
from ..world.scenario import Scenario
from ..world.sim import ContactTracker, collisions, step
from ..world.types import WorldState

TRACE_VERSION = 1


@dataclass
class RunResult:
    name: str
    category: str
    end_reason: str                 # arrival | timeout | fatal_collision
    ticks: int
    sim_duration_s: float
    wall_duration_s: float
    trace_lines: list[str]
    trace_path: Optional[Path] = None
    reasoning_count: int = 0
    interventions: int = 0


def time_budget_s(route_total_m: float, speed_limit: float) -> float:
    return 2.0 * (route_total_m / speed_limit) + 60.0


class SimulationRun:
    def __init__(
        self,
        scenario: Scenario,
        cfg: RunConfig,
        backend=None,
        latency=None,
        guidance_queue: Optional[GuidanceQueue] = None,
        guidance_script: tuple = (),
        frame_sink: Optional[Callable[[dict], None]] = None,
        run_id: str = "run",
    ):
        from dataclasses import replace as _replace

        self.scenario = scenario
        self.cfg = cfg
        self.world: WorldState = _replace(scenario.world, seed=cfg.seed)
        self.graph = self.world.graph
        self.run_id = run_id

        self.route = plan_route(self.graph, scenario.route.start, scenario.route.destination)
        self.nav = RouteState(self.route, self.graph)
        self.controller = Controller(self.graph, cfg.vehicle, cfg.idm, cfg.control, self.world.dt)
        self.decider = DecisionModule(self.graph, cfg.decision, cfg.vehicle, self.world.dt)
        self.ctx = StackContext()
        self.tracker = ContactTracker()
        self.frame_sink = frame_sink
        self.guidance_queue = guidance_queue
        self.guidance_script = sorted(guidance_script, key=lambda p: p[0])
        self._script_sent = 0

        self.coordinator: Optional[RecoveryCoordinator] = None
        if backend is not None:
            self.coordinator = RecoveryCoordinator(
                backend=backend,
                latency=latency,
                params=cfg.recovery_params,
                destination=scenario.route.destination,
                guidance=guidance_queue,
                lockstep=cfg.lockstep,
                seed=cfg.seed,
                ego_half_len=cfg.vehicle.half_length,
            )

        limits = [scenario.lane_speed_limits.get(l, 8.33) for l in self.route.lane_sequence()]
        self.reference_limit = max(limits) if limits else 8.33
        self.budget_s = time_budget_s(self.nav.base_length, self.reference_limit)

        self.lines: list[str] = []
        self.prev_status: Optional[EgoStatus] = None
        self.route_deviation_flagged = False
        self._recorded_reasoning = 0
        self.end_reason: Optional[str] = None
        self.infraction_count = 0

        self._emit(
            {
                "type": "header",
                "version": TRACE_VERSION,
                "artifact": __version__,
                "scenario": scenario.name,
                "category": scenario.category,
                "seed": cfg.seed,
                "dt": self.world.dt,
                "recovery": cfg.recovery,
                "lockstep": cfg.lockstep,
                "latency": {"mode": cfg.latency.mode, "seconds": cfg.latency.seconds},
                "map": self.graph.fingerprint(),
                "route_total_m": self.nav.base_length,
                "budget_s": self.budget_s,
                "penalties": {
                    "collision_pedestrian": cfg.metrics.penalty_pedestrian,
                    "collision_vehicle": cfg.metrics.penalty_vehicle,
                    "collision_static": cfg.metrics.penalty_static,
                    "red_light": cfg.metrics.penalty_red_light,
                    "route_deviation": cfg.metrics.penalty_route_deviation,
                    "timeout": cfg.metrics.penalty_timeout,
                },
            }
        )

    # trace plumbing

    def _emit(self, obj: dict) -> None:
        self.lines.append(json.dumps(obj, sort_keys=True))

    def _emit_event(self, tick: int, kind: str, **extra) -> None:
        self._emit({"type": "event", "tick": tick, "kind": kind, **extra})

    # guidance script

    def _pump_script(self, t: float) -> None:
        if self.guidance_queue is None:
            return
        while self._script_sent < len(self.guidance_script) and self.guidance_script[self._script_sent][0] <= t:
            at, text = self.guidance_script[self._script_sent]
            self.guidance_queue.enqueue(GuidanceMessage(run_id=self.run_id, sim_time=t, text=text, source="script"))
            self._emit_event(self.world.tick, "guidance_enqueued", text=text)
            self._script_sent += 1

    # main loop

    def tick_once(self) -> bool:
        """Advance one tick. Returns False when the run has ended."""
        world = self.world
        tick = world.tick
        ego = world.ego()

        self.nav.advance(ego.x, ego.y)
        limit = speed_limit_for(
            ego.lane_id, ego.s, world.control, self.scenario.lane_speed_limits.get(ego.lane_id, 8.33)
        )
        measurements, status = perceive(
            world, self.cfg.perception, self.nav, self.prev_status, limit, self.cfg.recovery_params.v_min_mps
        )
        facts = traffic_facts(
            world.t, world.control, status, self.graph, self.cfg.decision.tc_lookahead_m, self.cfg.vehicle.half_length
        )

        if status.destination_flag:
            self._finish(tick, "arrival", status)
            return False
        if world.t > self.budget_s:
            self._emit_event(tick, "timeout")
            self.infraction_count += 1
            self._finish(tick, "timeout", status)
            return False

        self._pump_script(world.t)

        unsatisfied = frozenset(
            f.sign.id
            for f in facts.signs
            if not f.sign.content.startswith("speed_limit") and f.sign.id not in self.ctx.satisfied_signs
        )

        override = None
        exclude_ids: frozenset = frozenset()
        if self.coordinator is not None:
            self.coordinator.on_tick(tick, world.dt, status, measurements, facts, self.nav, self.graph, unsatisfied)
            for ev in self.coordinator.events:
                self._emit({"type": "solver_event", **ev})
            self.coordinator.events.clear()
            override = self.coordinator.override
            if override is not None and not override.done:
                exclude_ids = override.exclude_ids

        behavior = self.decider.decide(status, measurements, facts, self.nav, self.ctx, override)
        try:
            cmd = self.controller.command(
                behavior, status, measurements, facts, self.ctx, tick, unsatisfied, exclude_ids
            )
        except InfeasibleBehavior as exc:
            if override is not None:
                override.failed = True
                self._emit_event(tick, "infeasible_behavior", detail=str(exc))
            cmd = self.controller.command(STOP, status, measurements, facts, self.ctx, tick, unsatisfied)

        nearby = [
            a.speed
            for a in world.others()
            if a.kind == "vehicle" and a.speed > 0.1 and euclid(a.x, a.y, ego.x, ego.y) <= self.cfg.metrics.nearby_radius_m
        ]
        solver_status = self.coordinator.status_label if self.coordinator is not None else "off"
        self._emit(
            {
                "type": "tick",
                "tick": tick,
                "digest": world.digest(),
                "cmd": [cmd.steer, cmd.throttle, cmd.brake, int(cmd.reverse)],
                "behavior": behavior.token(),
                "ego": [ego.x, ego.y, ego.heading, ego.speed],
                "lane": ego.lane_id,
                "remaining": status.route_remaining_m,
                "total": status.route_total_m,
                "nearby": (sum(nearby) / len(nearby)) if nearby else None,
                "solver": solver_status,
            }
        )
        if self.coordinator is not None:
            self._drain_reasoning()
        if self.frame_sink is not None:
            self.frame_sink(self._frame(tick, status, behavior, solver_status))

        red_cross = self._red_light_crossing(world, cmd)

        self.world = step(world, cmd, self.cfg.vehicle)

        if red_cross:
            self._emit_event(self.world.tick, "red_light")
            self.infraction_count += 1

        contacts = collisions(self.world)
        fatal = False
        for ev_tick, contact in self.tracker.update(self.world.tick, contacts):
            if contact.kind == "traversal":
                self._emit_event(ev_tick, "traversal", actor=contact.actor_id)
            else:
                self._emit_event(ev_tick, contact.kind, actor=contact.actor_id)
                self.infraction_count += 1
                if contact.kind == "collision_pedestrian":
                    fatal = True
        if not self.route_deviation_flagged:
            lane = self.graph.lane(self.nav.current_lane())
            _, lat, _ = lane.centerline.project(self.world.ego().x, self.world.ego().y)
            if abs(lat) > self.cfg.metrics.route_deviation_m:
                self._emit_event(self.world.tick, "route_deviation")
                self.infraction_count += 1
                self.route_deviation_flagged = True

        self.prev_status = status
        if fatal:
            self._finish(self.world.tick, "fatal_collision", status)
            return False
        return True

    def _drain_reasoning(self) -> None:
        records = self.coordinator.records
        while self._recorded_reasoning < len(records):
            self._emit(records[self._recorded_reasoning].to_json())
            self._recorded_reasoning += 1

    def _red_light_crossing(self, world: WorldState, cmd: ControlCommand) -> bool:
        ego = world.ego()
        for light in world.control.lights:
            if ego.lane_id not in light.lane_ids:
                continue
            color = light.phase_at(world.t)
            if color not in ("red", "yellow"):
                continue
            lane = self.graph.lane(light.lane_id)
            s_now, _, _ = lane.centerline.project(ego.x, ego.y)
            front_now = s_now + self.cfg.vehicle.half_length
            travel = max(0.0, ego.speed) * world.dt + 0.05
            if front_now <= light.s < front_now + travel and ego.speed > 0.2:
                return True
        return False

    def _frame(self, tick: int, status: EgoStatus, behavior, solver_status: str) -> dict:
        world = self.world
        return {
            "type": "frame",
            "run_id": self.run_id,
            "tick": tick,
            "t": world.t,
            "ego": {
                "x": status.x,
                "y": status.y,
                "heading": status.heading,
                "speed": status.speed,
                "behavior": behavior.token(),
                "lane": status.lane_id,
            },
            "actors": [
                {
                    "id": a.id,
                    "kind": a.kind,
                    "x": a.x,
                    "y": a.y,
                    "heading": a.heading,
                    "speed": a.speed,
                    "half_extent": [a.half_len, a.half_wid],
                    "door_open": a.door_open,
                    "traversable": a.traversable,
                }
                for a in world.others()
            ],
            "lights": [
                {"id": l.id, "lane": l.lane_id, "s": l.s, "color": l.phase_at(world.t)} for l in world.control.lights
            ],
            "route": [[wp.x, wp.y] for wp in self.nav.route.waypoints],
            "solver": solver_status,
            "remaining_m": status.route_remaining_m,
        }

    def _finish(self, tick: int, reason: str, status: EgoStatus) -> None:
        self.end_reason = reason
        self._emit(
            {
                "type": "final",
                "tick": tick,
                "end_reason": reason,
                "sim_duration_s": tick * self.world.dt,
                "remaining_m": status.route_remaining_m,
                "total_m": status.route_total_m,
            }
        )

    def run(self) -> RunResult:
        t0 = time.monotonic()
        max_ticks = int((self.budget_s + 5.0) / self.world.dt) + 10
        while self.end_reason is None and self.world.tick <= max_ticks:
            if not self.tick_once():
                break
        if self.end_reason is None:
            # defensive: budget check above should have ended the run
            self._finish(self.world.tick, "timeout", self.prev_status)
        wall = time.monotonic() - t0
        if self.coordinator is not None:
            self._drain_reasoning()
            self.coordinator.close()
        if self.guidance_queue is not None:
            self.guidance_queue.close()
        interventions = 0
        if self.coordinator is not None:
            interventions = sum(1 for r in self.coordinator.records if r.output is not None)
        return RunResult(
            name=self.scenario.name,
            category=self.scenario.category,
            end_reason=self.end_reason,
            ticks=self.world.tick,
            sim_duration_s=self.world.tick * self.world.dt,
            wall_duration_s=wall,
            trace_lines=self.lines,
            reasoning_count=len(self.coordinator.records) if self.coordinator else 0,
            interventions=interventions,
        )


