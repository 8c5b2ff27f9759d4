"""Harness tests: loop wiring, replay verification, runner output, CLI."""

import json
import pytest

from stucksim.backends.base import LatencyModel
from stucksim.backends.oracle import rule_oracle
from stucksim.config import RunConfig, load_run_config
from stucksim.guidance import GuidanceQueue
from stucksim.harness.cli import main as cli_main
from stucksim.harness.loop import SimulationRun
from stucksim.harness.replay import ReplayError, replay
from stucksim.harness.runner import run_suite
from stucksim.metrics import score_run
from stucksim.world.scenario import load_bundled


def run_scenario(name, recovery="oracle", guidance_script=(), seed=7, latency=None):
    sc = load_bundled(name, seed=seed)
    cfg = RunConfig(seed=seed, recovery=recovery)
    backend = rule_oracle if recovery == "oracle" else None
    queue = GuidanceQueue("t") if backend else None
    run = SimulationRun(
        sc,
        cfg,
        backend=backend,
        latency=latency or (LatencyModel() if backend else None),
        guidance_queue=queue,
        guidance_script=guidance_script,
        run_id="t",
    )
    return run.run()


def reasoning_records(result):
    return [json.loads(l) for l in result.trace_lines if json.loads(l).get("type") == "reasoning"]


def test_open_door_recovery_trace_contents():
    result = run_scenario("open_door")
    assert result.end_reason == "arrival"
    recs = reasoning_records(result)
    assert len(recs) >= 1
    plan = recs[0]["output"]
    assert plan["behavior_plan"][0] == "lane_change_left"
    assert recs[0]["applied_tick"] - recs[0]["request_tick"] == 56  # 2.8 s at 20 Hz


def test_construction_replans_through_left_lane():
    result = run_scenario("construction")
    assert result.end_reason == "arrival"
    recs = reasoning_records(result)
    plan = recs[0]["output"]
    assert plan["route_replanning"] is True
    assert plan["route_start_point"]["lane"] == "a"
    assert any(json.loads(l).get("kind") == "route_replanned" for l in result.trace_lines if "solver_event" in l)
    m = score_run(result.trace_lines)
    assert m.rc == 1.0


def test_traversal_not_an_infraction():
    result = run_scenario(
        "traversable_debris",
        guidance_script=((12.0, "it's just a plastic bag, drive over it"),),
    )
    assert result.end_reason == "arrival"
    events = [json.loads(l) for l in result.trace_lines if json.loads(l).get("type") == "event"]
    assert any(e["kind"] == "traversal" for e in events)
    m = score_run(result.trace_lines)
    assert m.infraction_score == 1.0 and m.success


def test_wait_plan_cycles_until_timeout_without_guidance():
    result = run_scenario("traversable_debris")
    assert result.end_reason == "timeout"
    recs = reasoning_records(result)
    assert len(recs) >= 3
    assert all(r["output"] is None or r["output"]["behavior_plan"] == ["wait(5)"] for r in recs)


def test_replay_fresh_trace_zero_divergence(tmp_path):
    result = run_scenario("parked_obstacle")
    trace = tmp_path / "trace.jsonl"
    trace.write_text("\n".join(result.trace_lines) + "\n")
    report = replay(trace)
    assert report.ok
    assert report.ticks_checked == result.ticks


def test_replay_detects_tampered_digest(tmp_path):
    result = run_scenario("red_light", recovery="off")
    lines = result.trace_lines[:]
    for i, line in enumerate(lines):
        d = json.loads(line)
        if d.get("type") == "tick" and d["tick"] == 100:
            d["digest"] = "0" * 32
            lines[i] = json.dumps(d, sort_keys=True)
            break
    trace = tmp_path / "trace.jsonl"
    trace.write_text("\n".join(lines) + "\n")
    report = replay(trace)
    assert not report.ok
    assert report.divergences[0].tick == 100
    assert report.divergences[0].kind == "digest"


def test_replay_recompute_oracle_identical(tmp_path):
    result = run_scenario("plastic_bag")
    trace = tmp_path / "trace.jsonl"
    trace.write_text("\n".join(result.trace_lines) + "\n")
    report = replay(trace, recompute=True)
    assert report.ok


def test_replay_version_mismatch(tmp_path):
    result = run_scenario("red_light", recovery="off")
    lines = result.trace_lines[:]
    header = json.loads(lines[0])
    header["artifact"] = "0.0.0-other"
    lines[0] = json.dumps(header, sort_keys=True)
    trace = tmp_path / "trace.jsonl"
    trace.write_text("\n".join(lines) + "\n")
    with pytest.raises(ReplayError):
        replay(trace)


def test_guided_replay_reproduces(tmp_path):
    result = run_scenario(
        "traversable_debris",
        guidance_script=((12.0, "it's just a plastic bag, drive over it"),),
    )
    trace = tmp_path / "trace.jsonl"
    trace.write_text("\n".join(result.trace_lines) + "\n")
    report = replay(trace)
    assert report.ok


def small_config(tmp_path, recovery="oracle", scenarios=("free_flow_straight", "open_door")):
    cfg = {
        "scenarios": list(scenarios),
        "recovery": recovery,
        "seed": 7,
        "lockstep": True,
        "output_dir": str(tmp_path / "out"),
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_run_suite_outputs(tmp_path):
    cfg = load_run_config(small_config(tmp_path))
    report = run_suite(cfg, quiet=True)
    out = tmp_path / "out"
    assert (out / "report.json").exists()
    assert (out / "report.txt").exists()
    assert (out / "open_door" / "trace.jsonl").exists()
    assert (out / "open_door" / "metrics.json").exists()
    assert report.sr == 100.0


def test_suite_continues_on_bad_scenario(tmp_path):
    cfg_path = small_config(tmp_path, scenarios=("no_such_scenario", "free_flow_straight"))
    cfg = load_run_config(cfg_path)
    report = run_suite(cfg, quiet=True)
    payload = json.loads((tmp_path / "out" / "report.json").read_text())
    assert payload["load_failures"]
    assert len(report.runs) == 1


def test_byte_identical_metrics_across_reruns(tmp_path):
    cfg = load_run_config(small_config(tmp_path))
    run_suite(cfg, out_dir=tmp_path / "r1", quiet=True)
    run_suite(cfg, out_dir=tmp_path / "r2", quiet=True)
    a = (tmp_path / "r1" / "open_door" / "metrics.json").read_bytes()
    b = (tmp_path / "r2" / "open_door" / "metrics.json").read_bytes()
    assert a == b
    ta = (tmp_path / "r1" / "open_door" / "trace.jsonl").read_bytes()
    tb = (tmp_path / "r2" / "open_door" / "trace.jsonl").read_bytes()
    assert ta == tb


def test_cli_run_score_replay(tmp_path, capsys):
    cfg_path = small_config(tmp_path, scenarios=("free_flow_straight",))
    assert cli_main(["run", "--config", str(cfg_path)]) == 0
    capsys.readouterr()
    trace = tmp_path / "out" / "free_flow_straight" / "trace.jsonl"
    assert cli_main(["score", "--trace", str(trace)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["ds"] == 1.0
    assert cli_main(["replay", "--trace", str(trace)]) == 0


def test_cli_scenarios_lists_bundled(capsys):
    assert cli_main(["scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ("construction", "open_door", "plastic_bag"):
        assert name in out


def test_suite_report_independent_of_order(tmp_path):
    names = ("open_door", "free_flow_straight", "red_light")
    cfg_a = load_run_config(small_config(tmp_path, scenarios=names))
    ra = run_suite(cfg_a, out_dir=tmp_path / "a", quiet=True)
    cfg_b = load_run_config(small_config(tmp_path, scenarios=tuple(reversed(names))))
    rb = run_suite(cfg_b, out_dir=tmp_path / "b", quiet=True)
    assert ra.to_json() == rb.to_json()


def test_baseline_blockage_reaches_permanent_stop():
    """In every blockage scenario the unaided stack ends in a lasting stop:
    speed stays below the stuck threshold for the remainder of the run."""
    for name in ("construction", "parked_obstacle", "open_door", "traversable_debris", "plastic_bag"):
        result = run_scenario(name, recovery="off")
        assert result.end_reason == "timeout", name
        speeds = [json.loads(l)["ego"][3] for l in result.trace_lines if json.loads(l).get("type") == "tick"]
        last_fast = max(i for i, v in enumerate(speeds) if abs(v) >= 1.25)
        # stalled for at least the last half of the run
        assert last_fast < len(speeds) * 0.5, f"{name}: still moving at tick {last_fast}/{len(speeds)}"


def test_cli_exit_zero_despite_driving_failures(tmp_path):
    cfg_path = small_config(tmp_path, recovery="off", scenarios=("construction",))
    assert cli_main(["run", "--config", str(cfg_path)]) == 0
    metrics = json.loads((tmp_path / "out" / "construction" / "metrics.json").read_text())
    assert metrics["success"] is False  # failure is data, not a harness error


def test_cli_rejects_misconfigured_llm(tmp_path):
    cfg = {
        "scenarios": ["free_flow_straight"],
        "recovery": "llm",
        "seed": 7,
        "output_dir": str(tmp_path / "out"),
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    assert cli_main(["run", "--config", str(p)]) == 2
