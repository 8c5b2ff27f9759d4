"""In-process stub server speaking the chat-completions wire format.

Used by the contract tests and available from the CLI for manual runs.
Behavior is scripted: each entry in the script handles one request; the
last entry repeats.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

VALID_PLAN_ARGS = {
    "immobilized": 1,
    "cause": "blocked_ego_lane",
    "intervene": True,
    "reason": "stub plan",
    "behavior_plan": ["lane_change_left", "lane_keep"],
    "route_replanning": False,
    "route_start_point": None,
}

NONE_ARGS = {"immobilized": 0, "cause": "traffic_control", "intervene": False}

MALFORMED_ARGS = {"immobilized": "maybe", "cause": "because"}


def completion_envelope(arguments: dict | str) -> dict:
    if not isinstance(arguments, str):
        arguments = json.dumps(arguments)
    return {
        "id": "stub-1",
        "object": "chat.completion",
        "model": "stub",
        "choices": [
            {
                "index": 0,
                "message": {
                    "role": "assistant",
                    "content": None,
                    "tool_calls": [
                        {
                            "id": "call-1",
                            "type": "function",
                            "function": {"name": "emit_recovery_plan", "arguments": arguments},
                        }
                    ],
                },
                "finish_reason": "tool_calls",
            }
        ],
    }


@dataclass
class StubScript:
    """One scripted reply: optional delay, then a canned arguments payload."""

    arguments: dict | str = field(default_factory=lambda: dict(VALID_PLAN_ARGS))
    sleep_s: float = 0.0
    status: int = 200


class StubLlmServer:
    def __init__(self, script: Optional[list[StubScript]] = None, port: int = 0):
        self.script = script or [StubScript()]
        self.requests: list[dict] = []
        self._count = 0
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length) or b"{}")
                with outer._lock:
                    outer.requests.append(body)
                    idx = min(outer._count, len(outer.script) - 1)
                    outer._count += 1
                entry = outer.script[idx]
                if entry.sleep_s:
                    time.sleep(entry.sleep_s)
                payload = json.dumps(completion_envelope(entry.arguments)).encode()
                self.send_response(entry.status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                try:
                    self.wfile.write(payload)
                except BrokenPipeError:
                    pass

        self._server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def endpoint(self) -> str:
        return f"http://127.0.0.1:{self.port}/v1/chat/completions"

    def __enter__(self) -> "StubLlmServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Run the stub chat-completions server")
    parser.add_argument("--port", type=int, default=8320)
    args = parser.parse_args(argv)
    with StubLlmServer(port=args.port) as server:
        print(f"stub llm server listening on {server.endpoint}")
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            return 0


if __name__ == "__main__":
    raise SystemExit(main())
