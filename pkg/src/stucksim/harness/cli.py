"""Command line entry point.

Subcommands: run (suite execution), replay (trace verification), score
(re-score a trace), serve (HTTP/SSE service), guide (send passenger
guidance to a live run), stub-llm (wire-format stub server), scenarios
(list bundled scenarios and configs).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from importlib import resources
from pathlib import Path


def _bundled_config(name: str) -> Path:
    f = resources.files("stucksim") / "configs" / f"{name}.json"
    if not f.is_file():
        raise SystemExit(f"no bundled config named {name!r}")
    return f  # type: ignore[return-value]


def cmd_run(args) -> int:
    from ..config import load_run_config
    from .runner import BackendMisconfigured, run_suite

    if args.config:
        path = Path(args.config)
        if not path.exists():
            path = _bundled_config(args.config)
        try:
            cfg = load_run_config(path)
        except ValueError as exc:
            print(f"bad run config: {exc}", file=sys.stderr)
            return 2
    else:
        from ..config import RunConfig

        if not args.scenario:
            print("either --config or --scenario is required", file=sys.stderr)
            return 2
        cfg = RunConfig(scenarios=tuple(tuple(sorted({"scenario": s, "guidance": ()}.items())) for s in args.scenario))
    if args.recovery:
        cfg = dataclasses.replace(cfg, recovery=args.recovery)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.lockstep is not None:
        cfg = dataclasses.replace(cfg, lockstep=args.lockstep)
    if args.output:
        cfg = dataclasses.replace(cfg, output_dir=args.output)
    cfg.validate()
    try:
        run_suite(cfg)
    except BackendMisconfigured as exc:
        print(f"backend misconfigured: {exc}", file=sys.stderr)
        return 2
    return 0


def cmd_replay(args) -> int:
    from .replay import ReplayError, replay

    try:
        report = replay(args.trace, recompute=args.recompute, scenario_path=args.scenario)
    except ReplayError as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report.to_json(), indent=2))
    return 0 if report.ok else 1


def cmd_score(args) -> int:
    from ..metrics import IncompleteTrace, score_run

    try:
        metrics = score_run(args.trace)
    except IncompleteTrace as exc:
        print(f"cannot score: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(metrics.to_json(), indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from ..service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_guide(args) -> int:
    import httpx

    url = f"{args.url.rstrip('/')}/runs/{args.run}/guidance"
    resp = httpx.post(url, json={"text": args.text}, timeout=10.0)
    print(f"{resp.status_code} {resp.text}")
    return 0 if resp.status_code == 200 else 1


def cmd_stub_llm(args) -> int:
    from ..backends.stub import main as stub_main

    return stub_main(["--port", str(args.port)])


def cmd_scenarios(_args) -> int:
    from ..world.scenario import bundled_names

    print("bundled scenarios:")
    for name in bundled_names():
        print(f"  {name}")
    print("bundled configs: suite_baseline, suite_oracle, suite_guided, suite_llm")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stucksim", description="Closed-loop driving simulator with a recovery agent")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario suite")
    p.add_argument("--config", help="run-config JSON file or bundled config name")
    p.add_argument("--scenario", action="append", help="bundled scenario name (repeatable, alternative to --config)")
    p.add_argument("--recovery", choices=["off", "oracle", "llm"], help="override recovery mode")
    p.add_argument("--seed", type=int)
    p.add_argument("--lockstep", dest="lockstep", action="store_true", default=None)
    p.add_argument("--no-lockstep", dest="lockstep", action="store_false")
    p.add_argument("--output", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="re-execute a trace and verify digests")
    p.add_argument("--trace", required=True)
    p.add_argument("--recompute", action="store_true", help="recompute oracle responses instead of feeding recorded ones")
    p.add_argument("--scenario", help="scenario path override for file-based scenarios")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("score", help="score a trace file")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("serve", help="start the live-run HTTP/SSE service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8311)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("guide", help="send passenger guidance to a live run")
    p.add_argument("--run", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--url", default="http://127.0.0.1:8311")
    p.set_defaults(func=cmd_guide)

    p = sub.add_parser("stub-llm", help="start the stub chat-completions server")
    p.add_argument("--port", type=int, default=8320)
    p.set_defaults(func=cmd_stub_llm)

    p = sub.add_parser("scenarios", help="list bundled scenarios and configs")
    p.set_defaults(func=cmd_scenarios)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
