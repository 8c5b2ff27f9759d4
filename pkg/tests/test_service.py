"""Service endpoint tests: run lifecycle, SSE ordering, guidance, limits."""

import json
import time

import pytest
from fastapi.testclient import TestClient

from stucksim.service.app import MAX_CONCURRENT_RUNS, Subscription, create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(output_root=tmp_path)
    with TestClient(app) as c:
        yield c


def sse_events(client, rid, stop_kinds=("metrics_final",), limit=20000, collect=None):
    events = []
    with client.stream("GET", f"/runs/{rid}/stream") as resp:
        buf = ""
        for chunk in resp.iter_text():
            buf += chunk
            while "\n\n" in buf:
                block, buf = buf.split("\n\n", 1)
                lines = block.strip().splitlines()
                kind = next((l[7:] for l in lines if l.startswith("event: ")), None)
                data = next((l[6:] for l in lines if l.startswith("data: ")), "{}")
                if kind:
                    events.append((kind, json.loads(data)))
                    if collect is not None:
                        collect(kind, json.loads(data))
            if any(k in stop_kinds for k, _ in events) or len(events) > limit:
                return events
    return events


def test_create_run_returns_id(client):
    r = client.post("/runs", json={"scenario": "free_flow_straight", "recovery": "off", "speed": 80.0})
    assert r.status_code == 200
    body = r.json()
    assert body["run_id"] and body["status"] == "running"


def test_unknown_scenario_400(client):
    r = client.post("/runs", json={"scenario": "does_not_exist"})
    assert r.status_code == 400


def test_concurrent_limit_409(client):
    ids = []
    for _ in range(MAX_CONCURRENT_RUNS):
        r = client.post("/runs", json={"scenario": "construction", "recovery": "off", "speed": 0.1})
        assert r.status_code == 200
        ids.append(r.json()["run_id"])
    over = client.post("/runs", json={"scenario": "construction", "recovery": "off"})
    assert over.status_code == 409


def test_stream_terminates_with_metrics_final(client):
    r = client.post("/runs", json={"scenario": "free_flow_straight", "recovery": "off", "speed": 100.0})
    rid = r.json()["run_id"]
    events = sse_events(client, rid)
    kinds = [k for k, _ in events]
    assert "frame" in kinds
    assert kinds[-1] == "metrics_final"
    final = events[-1][1]
    assert final["ds"] == 1.0


def test_reasoning_precedes_plan_event(client):
    r = client.post("/runs", json={"scenario": "open_door", "recovery": "oracle", "speed": 60.0})
    rid = r.json()["run_id"]
    events = sse_events(client, rid, stop_kinds=("metrics_final",))
    kinds = [k for k, _ in events]
    assert "reasoning" in kinds and "plan" in kinds
    assert kinds.index("reasoning") < kinds.index("plan")


def test_guidance_accepted_and_echoed(client):
    r = client.post("/runs", json={"scenario": "traversable_debris", "recovery": "oracle", "speed": 30.0})
    rid = r.json()["run_id"]
    time.sleep(0.2)
    g = client.post(f"/runs/{rid}/guidance", json={"text": "it's just a plastic bag, drive over it"})
    assert g.status_code == 200
    assert g.json()["accepted"] is True
    events = sse_events(client, rid, stop_kinds=("metrics_final",))
    reasoning = [d for k, d in events if k == "reasoning"]
    # the message reaches a later reasoning request
    assert any(d.get("guidance_text") for d in reasoning)
    info = client.get(f"/runs/{rid}").json()
    assert info["final_metrics"]["success"] is True


def test_guidance_errors(client):
    r = client.post("/runs", json={"scenario": "free_flow_straight", "recovery": "off", "speed": 200.0})
    rid = r.json()["run_id"]
    assert client.post("/runs/zzz/guidance", json={"text": "x"}).status_code == 404
    assert client.post(f"/runs/{rid}/guidance", json={"text": "x" * 501}).status_code == 422
    # wait for the run to finish, then 410
    for _ in range(200):
        if client.get(f"/runs/{rid}").json()["status"] != "running":
            break
        time.sleep(0.05)
    assert client.post(f"/runs/{rid}/guidance", json={"text": "hello"}).status_code == 410


def test_pause_resume_speed(client):
    r = client.post("/runs", json={"scenario": "free_flow_straight", "recovery": "off", "speed": 1.0})
    rid = r.json()["run_id"]
    assert client.post(f"/runs/{rid}/pause").json()["paused"] is True
    t1 = client.get(f"/runs/{rid}").json()["sim_time"]
    time.sleep(0.3)
    t2 = client.get(f"/runs/{rid}").json()["sim_time"]
    assert t2 - t1 < 0.2  # effectively frozen
    assert client.post(f"/runs/{rid}/resume").json()["paused"] is False
    assert client.post(f"/runs/{rid}/speed", json={"factor": 120.0}).json()["speed"] == 120.0
    sse_events(client, rid)  # drain to completion


def test_subscription_coalesces_to_latest_frame():
    sub = Subscription()
    for i in range(500):
        sub.offer_frame({"tick": i})
    batch = sub.next_batch(timeout=0.01)
    frames = [d for k, d in batch if k == "frame"]
    assert len(frames) == 1
    assert frames[0]["tick"] == 499  # latest wins, bounded memory
    # control events are never dropped
    sub.offer_event("plan", {"n": 1})
    sub.offer_event("plan", {"n": 2})
    kinds = [k for k, _ in sub.next_batch(timeout=0.01)]
    assert kinds.count("plan") == 2


def test_slow_reader_sees_monotone_recent_frames(client):
    r = client.post("/runs", json={"scenario": "free_flow_straight", "recovery": "off", "speed": 50.0})
    rid = r.json()["run_id"]
    seen = []

    def on_event(kind, data):
        if kind == "frame":
            seen.append(data["tick"])
            time.sleep(0.05)  # deliberately slow consumer

    sse_events(client, rid, collect=on_event)
    assert seen == sorted(seen)
    # a slow reader skips ticks rather than buffering them all
    assert len(seen) < 351


def test_headless_equivalence_with_service_observer(client, tmp_path):
    # the service is an observer: a run with no guidance matches headless metrics
    r = client.post("/runs", json={"scenario": "open_door", "recovery": "oracle", "speed": 100.0})
    rid = r.json()["run_id"]
    sse_events(client, rid)
    service_metrics = client.get(f"/runs/{rid}").json()["final_metrics"]

    from stucksim.backends.base import LatencyModel
    from stucksim.backends.oracle import rule_oracle
    from stucksim.config import RunConfig
    from stucksim.harness.loop import SimulationRun
    from stucksim.metrics import score_run
    from stucksim.world.scenario import load_bundled

    sc = load_bundled("open_door", seed=7)
    res = SimulationRun(
        sc,
        RunConfig(seed=7, recovery="oracle", lockstep=False),
        backend=rule_oracle,
        latency=LatencyModel(),
        run_id="headless",
    ).run()
    headless = score_run(res.trace_lines).to_json()
    assert service_metrics["ds"] == headless["ds"]
    assert service_metrics["success"] == headless["success"]
    assert service_metrics["rc"] == headless["rc"]


def test_stream_plan_events_match_trace_records(client, tmp_path):
    r = client.post("/runs", json={"scenario": "open_door", "recovery": "oracle", "speed": 80.0})
    rid = r.json()["run_id"]
    events = sse_events(client, rid)
    stream_plans = [d for k, d in events if k == "plan"]
    # the lossless trace file holds exactly one reasoning record per plan event
    app_root = client.app.state.manager.output_root
    trace = (app_root / rid / "trace.jsonl").read_text().splitlines()
    recorded_plans = [
        json.loads(l) for l in trace if json.loads(l).get("type") == "reasoning" and json.loads(l)["output"]
    ]
    assert len(stream_plans) == len(recorded_plans) > 0
    assert [p["request_tick"] for p in stream_plans] == [p["request_tick"] for p in recorded_plans]
