"""Low-level actuator command and the high-level behavior vocabulary."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ControlCommand:
    steer: float = 0.0      # [-1, 1]
    throttle: float = 0.0   # [0, 1]
    brake: float = 0.0      # [0, 1]
    reverse: bool = False   # gear selector; needed so Reverse is executable

    def __post_init__(self):
        object.__setattr__(self, "steer", min(1.0, max(-1.0, self.steer)))
        object.__setattr__(self, "throttle", min(1.0, max(0.0, self.throttle)))
        object.__setattr__(self, "brake", min(1.0, max(0.0, self.brake)))
        if self.throttle > 0.0 and self.brake > 0.0:
            raise ValueError("throttle and brake must not be engaged together")


@dataclass(frozen=True)
class Behavior:
    """One item of a behavior plan.

    kind is one of: lane_keep, lane_change_left, lane_change_right,
    proceed_through, stop, wait, reverse.
    """

    kind: str
    duration_s: float = 0.0   # wait only
    distance_m: float = 0.0   # reverse only

    def __post_init__(self):
        if self.kind not in BEHAVIOR_KINDS:
            raise ValueError(f"unknown behavior kind {self.kind!r}")
        if self.kind == "wait" and not self.duration_s > 0.0:
            raise ValueError("wait requires a positive duration")
        if self.kind == "reverse" and not 0.0 < self.distance_m <= 10.0:
            raise ValueError("reverse distance must be in (0, 10] m")

    def token(self) -> str:
        if self.kind == "wait":
            return f"wait({self.duration_s:g})"
        if self.kind == "reverse":
            return f"reverse({self.distance_m:g})"
        return self.kind


BEHAVIOR_KINDS = (
    "lane_keep",
    "lane_change_left",
    "lane_change_right",
    "proceed_through",
    "stop",
    "wait",
    "reverse",
)

LANE_KEEP = Behavior("lane_keep")
STOP = Behavior("stop")


def behavior_from_token(token: str) -> Behavior:
    token = token.strip()
    if token.startswith("wait(") and token.endswith(")"):
        return Behavior("wait", duration_s=float(token[5:-1]))
    if token.startswith("reverse(") and token.endswith(")"):
        return Behavior("reverse", distance_m=float(token[8:-1]))
    return Behavior(token)
