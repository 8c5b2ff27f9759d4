"""Trace replay: re-execute a recorded run and verify state digests."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .. import __version__
from ..backends.base import BackendUnavailable, ReasoningRequest, ReasoningResponse
from ..backends.oracle import rule_oracle
from ..config import LatencyConfig, RunConfig
from ..guidance import GuidanceQueue
from ..recovery.types import AnalysisResult, RecoveryPlan
from ..world.scenario import resolve_scenario
from .loop import SimulationRun
from .runner import LatencyModel


class ReplayError(Exception):
    pass


@dataclass
class Divergence:
    tick: int
    kind: str
    expected: str
    actual: str


@dataclass
class ReplayReport:
    ticks_checked: int
    divergences: list[Divergence] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.divergences

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "ticks_checked": self.ticks_checked,
            "divergences": [
                {"tick": d.tick, "kind": d.kind, "expected": d.expected, "actual": d.actual}
                for d in self.divergences[:10]
            ],
        }


class RecordedBackend:
    """Feeds recorded reasoning responses back in order.

    With recompute=True the live rule oracle answers instead and any output
    difference from the recording is collected as a divergence.
    """

    def __init__(self, records: list[dict], recompute: bool = False):
        self.records = records
        self.recompute = recompute
        self.cursor = 0
        self.mismatches: list[Divergence] = []
        self.name = records[0]["backend"] if records else "recorded"

    def __call__(self, request: ReasoningRequest) -> ReasoningResponse:
        if self.cursor >= len(self.records):
            raise BackendUnavailable("trace has no further recorded responses")
        rec = self.records[self.cursor]
        self.cursor += 1
        if rec["observation_text"] != request.observation_text:
            self.mismatches.append(
                Divergence(rec["request_tick"], "observation", rec["observation_text"], request.observation_text)
            )
        if self.recompute:
            live = rule_oracle(request)
            recorded_out = rec["output"]
            live_out = live.output.to_json() if live.output is not None else None
            if live_out != recorded_out:
                self.mismatches.append(
                    Divergence(rec["request_tick"], "output", json.dumps(recorded_out), json.dumps(live_out))
                )
            return live
        if rec.get("error"):
            raise BackendUnavailable(rec["error"])
        analysis = AnalysisResult(**rec["analysis"]) if rec.get("analysis") else AnalysisResult(0, "none")
        output = RecoveryPlan.from_json(rec["output"]) if rec.get("output") else None
        return ReasoningResponse(analysis=analysis, output=output, raw=rec.get("raw", ""))


def replay(trace_path: str | Path, recompute: bool = False, scenario_path: Optional[str] = None) -> ReplayReport:
    lines = [json.loads(l) for l in Path(trace_path).read_text(encoding="utf-8").splitlines() if l.strip()]
    if not lines or lines[0].get("type") != "header":
        raise ReplayError("trace has no header line")
    header = lines[0]
    if header.get("artifact") != __version__:
        raise ReplayError(
            f"version mismatch: trace from artifact {header.get('artifact')!r}, running {__version__!r}"
        )

    scenario = resolve_scenario(scenario_path or header["scenario"], seed=int(header["seed"]))
    if scenario.world.graph.fingerprint() != header["map"]:
        raise ReplayError("map fingerprint mismatch between trace and scenario")

    cfg = RunConfig(
        seed=int(header["seed"]),
        recovery=header["recovery"],
        lockstep=bool(header["lockstep"]),
        latency=LatencyConfig(mode=header["latency"]["mode"], seconds=header["latency"]["seconds"]),
    )

    reasoning = [l for l in lines if l.get("type") == "reasoning"]
    guidance_script = tuple(
        (e["tick"] * header["dt"], e["text"]) for e in lines if l_is_guidance(e)
    )

    backend = None
    queue = None
    if cfg.recovery != "off":
        backend = RecordedBackend(reasoning, recompute=recompute)
        queue = GuidanceQueue(header["scenario"])

    run = SimulationRun(
        scenario,
        cfg,
        backend=backend,
        latency=LatencyModel.from_config(cfg.latency) if backend is not None else None,
        guidance_queue=queue,
        guidance_script=guidance_script,
        run_id=header["scenario"],
    )
    result = run.run()

    recorded_ticks = [l for l in lines if l.get("type") == "tick"]
    fresh_ticks = [json.loads(l) for l in result.trace_lines]
    fresh_ticks = [l for l in fresh_ticks if l.get("type") == "tick"]

    report = ReplayReport(ticks_checked=min(len(recorded_ticks), len(fresh_ticks)))
    if backend is not None:
        report.divergences.extend(backend.mismatches)
    for old, new in zip(recorded_ticks, fresh_ticks):
        if old["digest"] != new["digest"]:
            report.divergences.append(Divergence(old["tick"], "digest", old["digest"], new["digest"]))
            break
    if len(recorded_ticks) != len(fresh_ticks) and not report.divergences:
        report.divergences.append(
            Divergence(
                min(len(recorded_ticks), len(fresh_ticks)),
                "length",
                str(len(recorded_ticks)),
                str(len(fresh_ticks)),
            )
        )
    report.divergences.sort(key=lambda d: d.tick)
    return report


def l_is_guidance(e: dict) -> bool:
    return e.get("type") == "event" and e.get("kind") == "guidance_enqueued"
