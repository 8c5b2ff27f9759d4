"""Recovery-layer data types: scene observation, analysis, recovery plan."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..av.command import Behavior, behavior_from_token

CAUSES = ("none", "traffic_control", "yielding", "blocked_ego_lane", "blocked_all_lanes", "unknown")

TP_TYPES = ("vehicle", "pedestrian", "obstacle")
TP_INTENTS = ("stationary", "proceeding", "crossing", "door_open", "unknown")
TP_LANES = ("ego", "left_adjacent", "right_adjacent", "opposite", "other")


def q1(x: float) -> float:
    """Quantize to 1 decimal (meters)."""
    return float(f"{x:.1f}") + 0.0


def q2(x: float) -> float:
    """Quantize to 2 decimals (speeds, timers)."""
    return float(f"{x:.2f}") + 0.0


@dataclass(frozen=True)
class TpEntry:
    ref_id: str
    type: str
    lane_position: str
    intent: str
    distance: float
    velocity: float
    traversable: Optional[bool] = None


@dataclass(frozen=True)
class WzEntry:
    lane_position: str
    start_m: float
    end_m: float


@dataclass(frozen=True)
class TcObs:
    tl: Optional[str] = None
    ts: tuple[str, ...] = ()
    wz: tuple[WzEntry, ...] = ()


@dataclass(frozen=True)
class EgoObs:
    speed: float
    stationary_time: float
    destination_flag: bool
    lane: str
    route_remaining_m: float


@dataclass(frozen=True)
class SceneObservation:
    tc: TcObs
    tp: tuple[TpEntry, ...]
    ego: EgoObs
    truncated: bool = False


@dataclass(frozen=True)
class AnalysisResult:
    immobilized: int
    cause: str

    def __post_init__(self):
        if self.immobilized not in (0, 1):
            raise ValueError("immobilized must be 0 or 1")
        if self.cause not in CAUSES:
            raise ValueError(f"unknown cause {self.cause!r}")
        if self.immobilized == 0 and self.cause not in ("none", "traffic_control", "yielding"):
            raise ValueError(f"cause {self.cause!r} implies immobilized=1")

    def to_json(self) -> dict:
        return {"immobilized": self.immobilized, "cause": self.cause}


class PlanValidationError(Exception):
    pass


@dataclass(frozen=True)
class RecoveryPlan:
    behavior_plan: tuple[Behavior, ...]
    reason: str
    route_replanning: bool = False
    route_start_point: Optional[tuple[str, float]] = None

    def validate(self, graph=None) -> None:
        if not self.behavior_plan:
            raise PlanValidationError("behavior plan must be non-empty")
        if self.route_replanning:
            if self.route_start_point is None:
                raise PlanValidationError("route replanning requires a start point")
            if graph is not None and self.route_start_point[0] not in graph.lanes:
                raise PlanValidationError(f"start point on unknown lane {self.route_start_point[0]!r}")
        elif self.route_start_point is not None:
            raise PlanValidationError("start point given without route replanning")

    def to_json(self) -> dict:
        out = {
            "behavior_plan": [b.token() for b in self.behavior_plan],
            "reason": self.reason,
            "route_replanning": self.route_replanning,
        }
        if self.route_start_point is not None:
            out["route_start_point"] = {"lane": self.route_start_point[0], "s": self.route_start_point[1]}
        return out

    @staticmethod
    def from_json(data: dict) -> "RecoveryPlan":
        try:
            behaviors = tuple(behavior_from_token(t) for t in data["behavior_plan"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PlanValidationError(f"bad behavior plan: {exc}") from None
        start = None
        if data.get("route_start_point") is not None:
            sp = data["route_start_point"]
            try:
                start = (str(sp["lane"]), float(sp["s"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise PlanValidationError(f"bad start point: {exc}") from None
        plan = RecoveryPlan(
            behavior_plan=behaviors,
            reason=str(data.get("reason", "")),
            route_replanning=bool(data.get("route_replanning", False)),
            route_start_point=start,
        )
        plan.validate()
        return plan


# SolverOutput is Optional[RecoveryPlan]: None means no intervention.
SolverOutput = Optional[RecoveryPlan]


@dataclass
class TraceRecord:
    """One reasoning-pipeline invocation, recorded losslessly."""

    request_tick: int
    branch: str                      # guided | autonomous
    observation_text: str
    map_digest: str
    guidance_text: Optional[str]
    analysis: Optional[AnalysisResult]
    output: SolverOutput
    raw: str
    prompt_hash: str
    backend: str
    retry_count: int = 0
    error: Optional[str] = None
    latency_ticks: int = 0
    applied_tick: Optional[int] = None
    stale_rejected: bool = False
    events: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "type": "reasoning",
            "request_tick": self.request_tick,
            "branch": self.branch,
            "observation_text": self.observation_text,
            "map_digest": self.map_digest,
            "guidance_text": self.guidance_text,
            "analysis": self.analysis.to_json() if self.analysis else None,
            "output": self.output.to_json() if self.output is not None else None,
            "raw": self.raw,
            "prompt_hash": self.prompt_hash,
            "backend": self.backend,
            "retry_count": self.retry_count,
            "error": self.error,
            "latency_ticks": self.latency_ticks,
            "applied_tick": self.applied_tick,
            "stale_rejected": self.stale_rejected,
            "events": list(self.events),
        }
