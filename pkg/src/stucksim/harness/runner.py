"""Batch execution of scenario suites across recovery configurations."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from ..backends.base import LatencyModel
from ..backends.llm import LlmBackend
from ..backends.oracle import rule_oracle
from ..config import RunConfig, scenario_entries
from ..guidance import GuidanceQueue
from ..metrics import RunMetrics, SuiteReport, aggregate, score_run
from ..world.scenario import Scenario, ScenarioError, resolve_scenario
from .loop import RunResult, SimulationRun


class BackendMisconfigured(Exception):
    pass


def make_backend(cfg: RunConfig):
    if cfg.recovery == "off":
        return None
    if cfg.recovery == "oracle":
        return rule_oracle
    if cfg.recovery == "llm":
        if cfg.llm is None:
            raise BackendMisconfigured("recovery=llm requires an llm config block")
        return LlmBackend(cfg.llm)
    raise BackendMisconfigured(f"unknown recovery mode {cfg.recovery!r}")


def execute_scenario(
    scenario: Scenario,
    cfg: RunConfig,
    guidance_script: tuple = (),
    frame_sink=None,
    run_id: Optional[str] = None,
) -> RunResult:
    backend = make_backend(cfg)
    queue = GuidanceQueue(run_id or scenario.name) if backend is not None else None
    run = SimulationRun(
        scenario,
        cfg,
        backend=backend,
        latency=LatencyModel.from_config(cfg.latency) if backend is not None else None,
        guidance_queue=queue,
        guidance_script=guidance_script,
        frame_sink=frame_sink,
        run_id=run_id or scenario.name,
    )
    return run.run()


def run_suite(cfg: RunConfig, out_dir: Optional[Path] = None, quiet: bool = False) -> SuiteReport:
    """Run every scenario in the config; write traces, metrics and the report.

    Scenario load failures are reported per file and the suite continues;
    backend misconfiguration aborts.
    """
    make_backend(cfg)  # fail fast on misconfiguration
    entries = scenario_entries(cfg)
    if not entries:
        raise ValueError("config lists no scenarios")
    out = Path(out_dir) if out_dir is not None else Path(cfg.output_dir)

    results: list[RunMetrics] = []
    failures: list[str] = []
    for entry in entries:
        name = entry["scenario"]
        try:
            scenario = resolve_scenario(name, seed=cfg.seed)
        except ScenarioError as exc:
            failures.append(f"{name}: {exc}")
            if not quiet:
                print(f"scenario load failed: {name}: {exc}")
            continue
        result = execute_scenario(scenario, cfg, guidance_script=entry.get("guidance", ()))
        metrics = score_run(result.trace_lines, cfg.metrics, wall_s=result.wall_duration_s)
        results.append(metrics)

        run_dir = out / scenario.name
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "trace.jsonl").write_text("\n".join(result.trace_lines) + "\n", encoding="utf-8")
        (run_dir / "metrics.json").write_text(
            json.dumps(metrics.to_json(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        if not quiet:
            print(
                f"{scenario.name:<22} {result.end_reason:<12} ds={metrics.ds:.3f} "
                f"success={metrics.success} ({result.sim_duration_s:.1f} s sim)"
            )

    if not results:
        raise ValueError("no scenario could be loaded")
    report = aggregate(results)
    out.mkdir(parents=True, exist_ok=True)
    payload = report.to_json()
    if failures:
        payload["load_failures"] = failures
    (out / "report.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(report.table() + "\n", encoding="utf-8")
    if not quiet:
        print()
        print(report.table())
    return report
