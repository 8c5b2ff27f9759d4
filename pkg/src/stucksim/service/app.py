"""HTTP/JSON service exposing live runs: create, inspect, stream, guide.

Each run gets its own worker thread pacing the sim loop in real time (with
an adjustable speed factor). Handlers never touch sim state directly; they
talk to the loop through the guidance queue and a lossy-latest frame bus.
The trace file stays lossless regardless of stream drops.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse, StreamingResponse

from ..backends.base import LatencyModel
from ..config import LatencyConfig, RunConfig
from ..guidance import GuidanceMessage, GuidanceQueue, MAX_GUIDANCE_CHARS, RunNotActive
from ..harness.loop import SimulationRun
from ..harness.runner import make_backend
from ..metrics import score_run
from ..world.scenario import ScenarioError, parse_scenario, resolve_scenario

MAX_CONCURRENT_RUNS = 4


class FrameBus:
    """Fan-out with lossy-latest frames and lossless ordered control events."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subscribers: list["Subscription"] = []

    def subscribe(self) -> "Subscription":
        sub = Subscription()
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: "Subscription") -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def publish_frame(self, frame: dict) -> None:
        with self._lock:
            for sub in self._subscribers:
                sub.offer_frame(frame)

    def publish_event(self, kind: str, payload: dict) -> None:
        with self._lock:
            for sub in self._subscribers:
                sub.offer_event(kind, payload)


class Subscription:
    """Latest-frame coalescing: a slow reader only ever misses frames."""

    def __init__(self):
        self._cond = threading.Condition()
        self._latest_frame: Optional[dict] = None
        self._events: list[tuple[str, dict]] = []
        self._closed = False

    def offer_frame(self, frame: dict) -> None:
        with self._cond:
            self._latest_frame = frame
            self._cond.notify()

    def offer_event(self, kind: str, payload: dict) -> None:
        with self._cond:
            self._events.append((kind, payload))
            self._cond.notify()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify()

    def next_batch(self, timeout: float = 0.5) -> list[tuple[str, dict]]:
        with self._cond:
            if self._latest_frame is None and not self._events and not self._closed:
                self._cond.wait(timeout)
            out: list[tuple[str, dict]] = list(self._events)
            self._events.clear()
            if self._latest_frame is not None:
                out.append(("frame", self._latest_frame))
                self._latest_frame = None
            return out

    @property
    def closed(self) -> bool:
        return self._closed


@dataclass
class ManagedRun:
    run_id: str
    scenario_name: str
    thread: threading.Thread
    bus: FrameBus
    guidance: GuidanceQueue
    map_lanes: list = field(default_factory=list)
    speed: float = 1.0
    paused: threading.Event = field(default_factory=threading.Event)
    status: str = "running"  # running | finished | failed
    final_metrics: Optional[dict] = None
    sim_time: float = 0.0
    trace_lines: Optional[list[str]] = None


class RunManager:
    def __init__(self, output_root: Path):
        self.runs: dict[str, ManagedRun] = {}
        self.output_root = output_root
        self._lock = threading.Lock()

    def active_count(self) -> int:
        with self._lock:
            return sum(1 for r in self.runs.values() if r.status == "running")

    def start(self, scenario_name: str, body: dict) -> ManagedRun:
        cfg = RunConfig(
            seed=int(body.get("seed", 7)),
            recovery=body.get("recovery", "oracle"),
            lockstep=False,
            latency=LatencyConfig(
                mode=body.get("latency", {}).get("mode", "fixed"),
                seconds=float(body.get("latency", {}).get("seconds", 2.8)),
            ),
        )
        cfg.validate()
        if "document" in body:
            scenario = parse_scenario(body["document"], seed=cfg.seed)
        else:
            scenario = resolve_scenario(scenario_name, seed=cfg.seed)
        run_id = uuid.uuid4().hex[:12]
        bus = FrameBus()
        guidance = GuidanceQueue(run_id)
        lanes = [
            {
                "id": lane.id,
                "centerline": [[float(x), float(y)] for x, y in zip(lane.centerline.xs, lane.centerline.ys)],
                "width": lane.width,
            }
            for lane in scenario.world.graph.lanes.values()
        ]
        managed = ManagedRun(
            run_id=run_id,
            scenario_name=scenario.name,
            thread=None,  # type: ignore[arg-type]
            bus=bus,
            guidance=guidance,
            map_lanes=lanes,
            speed=float(body.get("speed", 1.0)),
        )

        backend = make_backend(cfg)
        latency = LatencyModel.from_config(cfg.latency) if backend is not None else None

        def sink(frame: dict) -> None:
            managed.sim_time = frame["t"]
            bus.publish_frame(frame)

        sim = SimulationRun(
            scenario,
            cfg,
            backend=backend,
            latency=latency,
            guidance_queue=guidance if backend is not None else None,
            frame_sink=sink,
            run_id=run_id,
        )
        if sim.coordinator is not None:
            original_drain = sim._drain_reasoning

            def drain_and_publish():
                before = sim._recorded_reasoning
                original_drain()
                for rec in sim.coordinator.records[before : sim._recorded_reasoning]:
                    bus.publish_event("reasoning", rec.to_json())
                    if rec.output is not None:
                        bus.publish_event("plan", rec.to_json())

            sim._drain_reasoning = drain_and_publish

        def worker():
            try:
                dt = sim.world.dt
                while sim.end_reason is None:
                    while managed.paused.is_set() and sim.end_reason is None:
                        time.sleep(0.02)
                    t0 = time.monotonic()
                    if not sim.tick_once():
                        break
                    budget = dt / max(0.05, managed.speed)
                    elapsed = time.monotonic() - t0
                    if elapsed < budget:
                        time.sleep(budget - elapsed)
                if sim.end_reason is None:
                    sim._finish(sim.world.tick, "timeout", sim.prev_status)
                result_lines = sim.lines
                out_dir = self.output_root / run_id
                out_dir.mkdir(parents=True, exist_ok=True)
                (out_dir / "trace.jsonl").write_text("\n".join(result_lines) + "\n", encoding="utf-8")
                metrics = score_run(result_lines)
                (out_dir / "metrics.json").write_text(
                    json.dumps(metrics.to_json(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
                )
                managed.final_metrics = metrics.to_json()
                managed.trace_lines = result_lines
                managed.status = "finished"
                bus.publish_event("metrics_final", managed.final_metrics)
            except Exception as exc:  # run failure is data for the client
                managed.status = "failed"
                bus.publish_event("metrics_final", {"error": str(exc)})
            finally:
                guidance.close()

        managed.thread = threading.Thread(target=worker, daemon=True)
        with self._lock:
            self.runs[run_id] = managed
        managed.thread.start()
        return managed

    def get(self, run_id: str) -> Optional[ManagedRun]:
        with self._lock:
            return self.runs.get(run_id)


def create_app(output_root: str | Path = "runs/service") -> FastAPI:
    app = FastAPI(title="stucksim service")
    manager = RunManager(Path(output_root))
    app.state.manager = manager

    @app.post("/runs")
    def create_run(body: dict):
        scenario_name = body.get("scenario", "")
        if manager.active_count() >= MAX_CONCURRENT_RUNS:
            return JSONResponse({"error": "concurrent run limit reached"}, status_code=409)
        try:
            managed = manager.start(scenario_name, body)
        except (ScenarioError, ValueError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return {"run_id": managed.run_id, "scenario": managed.scenario_name, "status": managed.status}

    @app.get("/runs")
    def list_runs():
        return [
            {"run_id": r.run_id, "scenario": r.scenario_name, "status": r.status, "sim_time": r.sim_time}
            for r in manager.runs.values()
        ]

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        r = manager.get(run_id)
        if r is None:
            return JSONResponse({"error": "unknown run"}, status_code=404)
        return {
            "run_id": r.run_id,
            "scenario": r.scenario_name,
            "status": r.status,
            "sim_time": r.sim_time,
            "speed": r.speed,
            "paused": r.paused.is_set(),
            "guidance": r.guidance.history(),
            "final_metrics": r.final_metrics,
            "map": r.map_lanes,
        }

    @app.get("/runs/{run_id}/stream")
    def stream(run_id: str, request: Request):
        r = manager.get(run_id)
        if r is None:
            return JSONResponse({"error": "unknown run"}, status_code=404)
        sub = r.bus.subscribe()

        def gen():
            try:
                yield "event: hello\ndata: {}\n\n".format(json.dumps({"run_id": r.run_id}))
                idle = 0.0
                while True:
                    batch = sub.next_batch(timeout=0.5)
                    if not batch:
                        if r.status != "running":
                            break
                        idle += 0.5
                        if idle >= 15.0:
                            yield ": keepalive\n\n"
                            idle = 0.0
                        continue
                    idle = 0.0
                    for kind, payload in batch:
                        yield f"event: {kind}\ndata: {json.dumps(payload)}\n\n"
                    if any(kind == "metrics_final" for kind, _ in batch):
                        break
            finally:
                r.bus.unsubscribe(sub)

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.post("/runs/{run_id}/guidance")
    def post_guidance(run_id: str, body: dict):
        r = manager.get(run_id)
        if r is None:
            return JSONResponse({"error": "unknown run"}, status_code=404)
        if r.status != "running":
            return JSONResponse({"error": "run finished"}, status_code=410)
        text = str(body.get("text", ""))
        if not text.strip() or len(text) > MAX_GUIDANCE_CHARS:
            return JSONResponse({"error": "guidance text must be 1..500 chars"}, status_code=422)
        try:
            msg = GuidanceMessage(run_id=run_id, sim_time=r.sim_time, text=text, source="service")
            r.guidance.enqueue(msg)
        except (RunNotActive, ValueError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=410)
        r.bus.publish_event("guidance", {"text": text, "sim_time": r.sim_time})
        return {"accepted": True, "sim_time": r.sim_time}

    @app.post("/runs/{run_id}/pause")
    def pause(run_id: str):
        r = manager.get(run_id)
        if r is None:
            return JSONResponse({"error": "unknown run"}, status_code=404)
        r.paused.set()
        return {"paused": True}

    @app.post("/runs/{run_id}/resume")
    def resume(run_id: str):
        r = manager.get(run_id)
        if r is None:
            return JSONResponse({"error": "unknown run"}, status_code=404)
        r.paused.clear()
        return {"paused": False}

    @app.post("/runs/{run_id}/speed")
    def set_speed(run_id: str, body: dict):
        r = manager.get(run_id)
        if r is None:
            return JSONResponse({"error": "unknown run"}, status_code=404)
        try:
            r.speed = max(0.05, float(body.get("factor", 1.0)))
        except (TypeError, ValueError):
            return JSONResponse({"error": "factor must be a number"}, status_code=400)
        return {"speed": r.speed}

    @app.get("/scenarios")
    def scenarios():
        from ..world.scenario import bundled_names

        return {"scenarios": bundled_names()}

    @app.get("/")
    def index():
        candidate = _ui_root()
        if candidate is not None:
            return FileResponse(candidate / "index.html")
        return JSONResponse({"service": "stucksim", "ui": "not built"})

    @app.get("/ui/{path:path}")
    def ui_assets(path: str):
        candidate = _ui_root()
        if candidate is None:
            return JSONResponse({"error": "ui not built"}, status_code=404)
        target = (candidate / "ui" / path).resolve()
        if not str(target).startswith(str(candidate.resolve())) or not target.is_file():
            return JSONResponse({"error": "not found"}, status_code=404)
        return FileResponse(target)

    return app


def _ui_root() -> Optional[Path]:
    here = Path(__file__).resolve()
    for parent in here.parents:
        candidate = parent / "frontend" / "dist"
        if (candidate / "index.html").is_file():
            return candidate
    return None
