"""Reasoning backend contract shared by the rule oracle and the chat client."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol

from ..config import LatencyConfig
from ..recovery.types import AnalysisResult, SolverOutput
from ..world.types import stable_normal


class BackendUnavailable(Exception):
    """Transport failure or timeout; the solver must fail closed."""


class SchemaViolation(Exception):
    """Backend returned a payload that does not parse into a valid plan."""


@dataclass(frozen=True)
class ReasoningRequest:
    system_prompt: str
    observation_text: str
    guidance_text: Optional[str]
    allowed_behaviors: tuple[str, ...]
    map_digest: str


@dataclass(frozen=True)
class ReasoningResponse:
    analysis: AnalysisResult
    output: SolverOutput
    raw: str
    retry_count: int = 0
    events: tuple[str, ...] = ()

    def __post_init__(self):
        if self.output is not None and self.analysis.immobilized != 1:
            raise ValueError("a recovery plan implies immobilized=1")


class ReasoningBackend(Protocol):
    name: str

    def __call__(self, request: ReasoningRequest) -> ReasoningResponse: ...


@dataclass(frozen=True)
class LatencyModel:
    """Simulated reasoning delay; deterministic under lockstep."""

    mode: str = "fixed"  # zero | fixed | lognormal
    seconds: float = 2.8
    mu: float = 1.0
    sigma: float = 0.25

    @staticmethod
    def from_config(cfg: LatencyConfig) -> "LatencyModel":
        return LatencyModel(mode=cfg.mode, seconds=cfg.seconds, mu=cfg.mu, sigma=cfg.sigma)

    def sample_seconds(self, seed: int, tick: int) -> float:
        if self.mode == "zero":
            return 0.0
        if self.mode == "fixed":
            return self.seconds
        z = stable_normal(seed, tick, "latency")
        return math.exp(self.mu + self.sigma * z)

    def sample_ticks(self, dt: float, seed: int, tick: int) -> int:
        d = self.sample_seconds(seed, tick)
        n = round(d / dt)
        return max(0, int(n))
