"""Recovery coordinator: gating, cooldown, latency, plan application.

Owns all recovery state for a run. Non-intrusive by construction: until a
plan is installed it only observes; the baseline command path is untouched.
"""

from __future__ import annotations

from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from ..av.decision import OverrideState
from ..av.perception import EgoStatus, ObjectMeasurement
from ..av.route import NoRoute, RouteState, plan_route
from ..av.situation import TrafficFacts
from ..backends.base import LatencyModel
from ..config import RecoveryParams
from ..guidance import GuidanceQueue
from ..recovery.detector import detect_immobilization
from ..recovery.observation import build_observation, map_digest_line
from ..recovery.pipeline import run_pipeline
from ..recovery.types import PlanValidationError, RecoveryPlan, SolverOutput, TraceRecord


@dataclass
class _Pending:
    request_tick: int
    due_tick: int
    record: TraceRecord
    output: SolverOutput = None
    future: Optional[Future] = None


class RecoveryCoordinator:
    def __init__(
        self,
        backend,
        latency: LatencyModel,
        params: RecoveryParams,
        destination: tuple[str, float],
        guidance: Optional[GuidanceQueue] = None,
        lockstep: bool = True,
        seed: int = 0,
        ego_half_len: float = 2.4,
    ):
        self.backend = backend
        self.latency = latency
        self.params = params
        self.destination = destination
        self.guidance = guidance
        self.lockstep = lockstep
        self.seed = seed
        self.ego_half_len = ego_half_len
        self.override: Optional[OverrideState] = None
        self.pending: Optional[_Pending] = None
        self.last_request_tick: Optional[int] = None
        self.records: list[TraceRecord] = []
        self.events: list[dict] = []
        self._plan_count = 0
        self._executor: Optional[ThreadPoolExecutor] = None
        self.status_label = "idle"

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=False)

    # gating

    def _cooldown_ok(self, tick: int, dt: float) -> bool:
        if self.last_request_tick is None:
            return True
        return (tick - self.last_request_tick) * dt >= self.params.cooldown_s

    def _should_invoke(self, tick: int, dt: float, status: EgoStatus) -> tuple[bool, bool]:
        """(invoke?, guidance_attached?)"""
        if self.pending is not None:
            return False, False
        stuck = detect_immobilization(status, self.params.v_min_mps, self.params.delta_t_s)
        if not stuck:
            return False, False
        has_guidance = self.guidance is not None and self.guidance.has_pending()
        if self.override is not None and not self.override.done:
            # a fresh passenger message may preempt an installed plan
            return (has_guidance, has_guidance)
        if has_guidance:
            return True, True
        return self._cooldown_ok(tick, dt), False

    # per-tick hook, called before decide()

    def on_tick(
        self,
        tick: int,
        dt: float,
        status: EgoStatus,
        measurements: list[ObjectMeasurement],
        facts: TrafficFacts,
        nav: RouteState,
        graph,
        unsatisfied_signs: frozenset[str],
    ) -> None:
        if self.override is not None and (self.override.done or self.override.failed):
            self.override = None

        if self.pending is not None and tick >= self.pending.due_tick:
            self._resolve(tick, status, measurements, facts, nav, graph)

        invoke, attach_guidance = self._should_invoke(tick, dt, status)
        if invoke:
            self._issue(tick, dt, status, measurements, facts, nav, graph, unsatisfied_signs, attach_guidance)
            if self.pending is not None and tick >= self.pending.due_tick:
                self._resolve(tick, status, measurements, facts, nav, graph)

        if self.override is not None and not self.override.done:
            self.status_label = "plan_active"
        elif self.pending is not None:
            self.status_label = "reasoning"
        else:
            self.status_label = "detecting" if detect_immobilization(status, self.params.v_min_mps, self.params.delta_t_s) else "idle"

    def _issue(self, tick, dt, status, measurements, facts, nav, graph, unsatisfied_signs, attach_guidance) -> None:
        guidance_text = None
        if attach_guidance and self.guidance is not None:
            msg = self.guidance.take_pending()
            if msg is not None:
                guidance_text = msg.text
        obs = build_observation(
            measurements,
            facts,
            status,
            unsatisfied_sign_ids=unsatisfied_signs,
            max_entries=self.params.observation_max_entries,
        )
        digest = map_digest_line(status, graph)
        delay_ticks = self.latency.sample_ticks(dt, self.seed, tick)
        self.last_request_tick = tick

        if self.lockstep:
            output, record = run_pipeline(obs, digest, guidance_text, self.backend, tick)
            record.latency_ticks = delay_ticks
            self.pending = _Pending(request_tick=tick, due_tick=tick + delay_ticks, record=record, output=output)
        else:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(max_workers=1)
            future = self._executor.submit(run_pipeline, obs, digest, guidance_text, self.backend, tick)
            record = None  # filled on resolution
            self.pending = _Pending(request_tick=tick, due_tick=tick + delay_ticks, record=record, future=future)
        self.events.append({"kind": "reasoning_started", "tick": tick, "guided": guidance_text is not None})

    def _resolve(self, tick, status, measurements, facts, nav, graph) -> None:
        pending = self.pending
        assert pending is not None
        if pending.future is not None:
            # realtime mode: the modeled delay has elapsed in sim time, so
            # wait out any remaining wall-clock compute before applying
            pending.output, pending.record = pending.future.result()
            pending.record.latency_ticks = pending.due_tick - pending.request_tick
        self.pending = None
        record = pending.record
        record.applied_tick = tick

        output = pending.output
        if output is None:
            self.records.append(record)
            self.events.append({"kind": "reasoning_done", "tick": tick, "intervened": False})
            return

        installed = self._apply(output, record, tick, status, measurements, facts, nav, graph)
        self.records.append(record)
        self.events.append({"kind": "reasoning_done", "tick": tick, "intervened": installed})

    # plan application

    def _stale(self, plan: RecoveryPlan, status, measurements) -> Optional[str]:
        """Re-validate plan preconditions against the current tick."""
        if abs(status.speed) >= self.params.v_min_mps:
            return "vehicle already moving"
        first = plan.behavior_plan[0]
        if first.kind in ("lane_change_left", "lane_change_right"):
            side = "left_adjacent" if first.kind == "lane_change_left" else "right_adjacent"
            for m in measurements:
                if m.lane_relation != side or m.distance > self.params.lane_clear_margin_m:
                    continue
                if m.kind == "static_obstacle" and (m.traversable is True or self._plan_traverses(plan)):
                    continue
                return f"target lane occupied by {m.actor_id}"
        return None

    @staticmethod
    def _plan_traverses(plan: RecoveryPlan) -> bool:
        return any(b.kind == "proceed_through" for b in plan.behavior_plan)

    def _avoid_intervals(self, plan: RecoveryPlan, measurements, facts) -> tuple:
        avoid = [(z.zone.lane_id, z.zone.s0, z.zone.s1) for z in facts.zones]
        traverses = self._plan_traverses(plan)
        for m in measurements:
            if m.lane_id is None:
                continue
            stationary = abs(m.velocity) < 0.1
            if m.kind == "vehicle" and stationary:
                avoid.append((m.lane_id, m.s_on_lane - m.half_len - 1.0, m.s_on_lane + m.half_len + 1.0))
            elif m.kind == "static_obstacle" and not traverses and m.traversable is not True:
                avoid.append((m.lane_id, m.s_on_lane - m.half_len - 1.0, m.s_on_lane + m.half_len + 1.0))
        return tuple(avoid)

    def _clear_points(self, status, measurements, facts, graph) -> tuple:
        points = []
        for m in measurements:
            if (m.lane_relation == "ego_lane" or m.sweeps_ego_lane) and m.lane_id is not None:
                if m.kind == "pedestrian" or abs(m.velocity) < 0.1:
                    points.append((m.lane_id, m.s_on_lane + m.half_len + self.ego_half_len + self.params.pass_margin_m))
        for z in facts.ego_zones():
            points.append((z.zone.lane_id, z.zone.s1 + self.params.pass_margin_m))
        return tuple(points)

    def _exclude_ids(self, plan: RecoveryPlan, measurements) -> frozenset[str]:
        traverses = self._plan_traverses(plan)
        out = set()
        for m in measurements:
            if m.kind != "static_obstacle":
                continue
            if m.traversable is True or (traverses and m.traversable is None):
                out.add(m.actor_id)
        return frozenset(out)

    def _apply(self, plan: RecoveryPlan, record: TraceRecord, tick, status, measurements, facts, nav, graph) -> bool:
        try:
            plan.validate(graph)
        except PlanValidationError as exc:
            record.error = f"plan_rejected: {exc}"
            record.output = None
            return False

        stale = self._stale(plan, status, measurements)
        if stale is not None:
            record.stale_rejected = True
            record.error = f"plan_stale: {stale}"
            record.output = None
            return False

        if plan.route_replanning:
            assert plan.route_start_point is not None
            avoid = self._avoid_intervals(plan, measurements, facts)
            try:
                new_route = plan_route(graph, plan.route_start_point, self.destination, avoid=avoid)
            except NoRoute as exc:
                record.error = f"replanning_failed: {exc}"
                record.output = None
                self.events.append({"kind": "replanning_failed", "tick": tick, "detail": str(exc)})
                return False
            nav.swap(new_route)
            self.events.append({"kind": "route_replanned", "tick": tick})

        self._plan_count += 1
        self.override = OverrideState(
            items=plan.behavior_plan,
            plan_id=f"plan-{self._plan_count}",
            clear_points=self._clear_points(status, measurements, facts, graph),
            exclude_ids=self._exclude_ids(plan, measurements),
        )
        self.events.append({"kind": "plan_installed", "tick": tick, "plan_id": self.override.plan_id})
        return True
