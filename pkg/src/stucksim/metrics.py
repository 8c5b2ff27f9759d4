"""Closed-loop scoring: route completion, infraction score, driving score,
success, efficiency, comfort; suite aggregation and the report table."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .config import MetricsParams
from .geometry import wrap_angle

INFRACTION_KINDS = (
    "collision_pedestrian",
    "collision_vehicle",
    "collision_static",
    "red_light",
    "route_deviation",
    "timeout",
)


class IncompleteTrace(Exception):
    pass


@dataclass(frozen=True)
class InfractionEvent:
    tick: int
    kind: str
    penalty: float


@dataclass
class RunMetrics:
    name: str
    category: str
    rc: float
    infraction_score: float
    ds: float
    success: bool
    efficiency: float
    comfort: float
    infractions: list[InfractionEvent]
    sim_duration_s: float
    wall_duration_s: float
    end_reason: str

    def to_json(self) -> dict:
        # wall time deliberately excluded so repeated lockstep runs emit
        # byte-identical metrics files
        return {
            "name": self.name,
            "category": self.category,
            "rc": self.rc,
            "is": self.infraction_score,
            "ds": self.ds,
            "success": self.success,
            "efficiency": self.efficiency,
            "comfort": self.comfort,
            "infractions": [{"tick": e.tick, "kind": e.kind, "penalty": e.penalty} for e in self.infractions],
            "sim_duration_s": self.sim_duration_s,
            "end_reason": self.end_reason,
        }


def _parse_lines(trace: Iterable[str]) -> list[dict]:
    return [json.loads(line) for line in trace if line.strip()]


def infraction_product(penalties: Iterable[float]) -> float:
    """Product of penalty multipliers, in canonical (sorted) order so the
    result is exactly invariant under reordering of the event list."""
    score = 1.0
    for p in sorted(penalties):
        score *= p
    return score


def score_run(trace: Iterable[str] | str | Path, params: Optional[MetricsParams] = None, wall_s: float = 0.0) -> RunMetrics:
    """Score one completed run from its lossless trace."""
    if isinstance(trace, (str, Path)):
        lines = _parse_lines(Path(trace).read_text(encoding="utf-8").splitlines())
    else:
        lines = _parse_lines(trace)
    if not lines or lines[0].get("type") != "header":
        raise IncompleteTrace("missing header line")
    header = lines[0]
    final = next((l for l in lines if l.get("type") == "final"), None)
    if final is None:
        raise IncompleteTrace("missing final line (run not ended)")

    p = params or MetricsParams()
    penalty_table = header.get("penalties") or {}

    def penalty_for(kind: str) -> float:
        if kind in penalty_table:
            return float(penalty_table[kind])
        return p.penalty_for(kind)

    ticks = [l for l in lines if l.get("type") == "tick"]
    events = [l for l in lines if l.get("type") == "event"]
    dt = float(header["dt"])

    # route completion: monotone best progress; arrival completes the route
    rc = 0.0
    for l in ticks:
        total = l["total"]
        if total <= 0.0:
            rc = 1.0
            break
        progress = 1.0 - l["remaining"] / total
        rc = max(rc, min(1.0, max(0.0, progress)))
    if final["end_reason"] == "arrival":
        rc = 1.0

    infractions = [
        InfractionEvent(tick=e["tick"], kind=e["kind"], penalty=penalty_for(e["kind"]))
        for e in events
        if e["kind"] in INFRACTION_KINDS
    ]
    iscore = infraction_product(ev.penalty for ev in infractions)
    ds = rc * iscore

    budget = float(header.get("budget_s", math.inf))
    success = final["end_reason"] == "arrival" and rc >= 1.0 and not infractions and final["sim_duration_s"] <= budget

    # efficiency: ego speed vs nearby moving traffic, capped
    ratios = []
    for l in ticks:
        nearby = l.get("nearby")
        if nearby is None or nearby <= 0.0:
            continue
        ratios.append(min(p.efficiency_cap, max(0.0, l["ego"][3]) / nearby))
    efficiency = sum(ratios) / len(ratios) if ratios else 1.0

    # comfort: accel, jerk, yaw rate within bounds
    speeds = [l["ego"][3] for l in ticks]
    headings = [l["ego"][2] for l in ticks]
    accels = [(b - a) / dt for a, b in zip(speeds, speeds[1:])]
    jerks = [(b - a) / dt for a, b in zip(accels, accels[1:])]
    yaw_rates = [wrap_angle(b - a) / dt for a, b in zip(headings, headings[1:])]
    n = len(jerks)
    if n <= 0:
        comfort = 1.0
    else:
        ok = 0
        for i in range(n):
            if abs(accels[i + 1]) <= p.comfort_accel and abs(jerks[i]) <= p.comfort_jerk and abs(yaw_rates[i + 1]) <= p.comfort_yaw_rate:
                ok += 1
        comfort = ok / n

    return RunMetrics(
        name=header["scenario"],
        category=header["category"],
        rc=rc,
        infraction_score=iscore,
        ds=ds,
        success=success,
        efficiency=efficiency,
        comfort=comfort,
        infractions=infractions,
        sim_duration_s=final["sim_duration_s"],
        wall_duration_s=wall_s,
        end_reason=final["end_reason"],
    )


@dataclass
class SuiteReport:
    ds: float
    sr: float
    efficiency: float
    comfort: float
    runs: list[RunMetrics]
    by_category: dict

    def to_json(self) -> dict:
        return {
            "ds": self.ds,
            "sr": self.sr,
            "efficiency": self.efficiency,
            "comfort": self.comfort,
            "by_category": self.by_category,
            "runs": [r.to_json() for r in sorted(self.runs, key=lambda r: r.name)],
        }

    def table(self) -> str:
        header = f"{'Configuration':<24}{'DS':>8}{'SR(%)':>8}{'Efficiency':>12}{'Comfort':>9}"
        row = f"{'suite':<24}{self.ds:>8.2f}{self.sr:>8.2f}{self.efficiency:>12.2f}{self.comfort:>9.2f}"
        lines = [header, "-" * len(header), row, ""]
        lines.append(f"{'Category':<24}{'DS':>8}{'SR(%)':>8}{'Runs':>6}")
        for cat in sorted(self.by_category):
            c = self.by_category[cat]
            lines.append(f"{cat:<24}{c['ds']:>8.2f}{c['sr']:>8.2f}{c['count']:>6d}")
        return "\n".join(lines)


def aggregate(runs: list[RunMetrics]) -> SuiteReport:
    if not runs:
        raise ValueError("aggregate needs at least one run")
    ordered = sorted(runs, key=lambda r: r.name)
    mean = lambda xs: sum(xs) / len(xs)
    by_category: dict = {}
    for cat in sorted({r.category for r in ordered}):
        cat_runs = [r for r in ordered if r.category == cat]
        by_category[cat] = {
            "ds": 100.0 * mean([r.ds for r in cat_runs]),
            "sr": 100.0 * mean([1.0 if r.success else 0.0 for r in cat_runs]),
            "count": len(cat_runs),
        }
    return SuiteReport(
        ds=100.0 * mean([r.ds for r in ordered]),
        sr=100.0 * mean([1.0 if r.success else 0.0 for r in ordered]),
        efficiency=100.0 * mean([r.efficiency for r in ordered]),
        comfort=100.0 * mean([r.comfort for r in ordered]),
        runs=ordered,
        by_category=by_category,
    )
