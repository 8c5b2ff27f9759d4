"""Chat-completions backend with function calling and schema-checked output."""

from __future__ import annotations

import hashlib
import json
import os
from importlib import resources
from typing import Optional

import httpx

from ..config import LlmConfig
from ..recovery.types import AnalysisResult, CAUSES, PlanValidationError, RecoveryPlan
from .base import BackendUnavailable, ReasoningRequest, ReasoningResponse, SchemaViolation

FUNCTION_NAME = "emit_recovery_plan"

PLAN_FUNCTION_SCHEMA = {
    "type": "object",
    "required": ["immobilized", "cause", "intervene"],
    "properties": {
        "immobilized": {"type": "integer", "enum": [0, 1]},
        "cause": {"type": "string", "enum": list(CAUSES)},
        "intervene": {"type": "boolean"},
        "reason": {"type": "string"},
        "behavior_plan": {"type": "array", "items": {"type": "string"}},
        "route_replanning": {"type": "boolean"},
        "route_start_point": {
            "type": ["object", "null"],
            "properties": {"lane": {"type": "string"}, "s": {"type": "number"}},
        },
    },
}


def load_prompt(name: str) -> str:
    return (resources.files("stucksim") / "backends" / "prompts" / name).read_text(encoding="utf-8")


def prompt_hash() -> str:
    h = hashlib.sha256()
    for name in ("system.txt", "cot.txt"):
        h.update(load_prompt(name).encode("utf-8"))
    return h.hexdigest()[:16]


def _parse_arguments(args_text: str) -> tuple[AnalysisResult, Optional[RecoveryPlan]]:
    try:
        args = json.loads(args_text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"function arguments are not JSON: {exc}") from None
    if not isinstance(args, dict):
        raise SchemaViolation("function arguments must be an object")
    try:
        analysis = AnalysisResult(immobilized=int(args["immobilized"]), cause=str(args["cause"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"bad analysis fields: {exc}") from None
    intervene = bool(args.get("intervene", False))
    if not intervene or analysis.immobilized == 0:
        return analysis, None
    try:
        plan = RecoveryPlan.from_json(args)
    except PlanValidationError as exc:
        raise SchemaViolation(str(exc)) from None
    return analysis, plan


class LlmBackend:
    """Single-request client; one retry with an error-correction message."""

    name = "llm"

    def __init__(self, cfg: LlmConfig):
        self.cfg = cfg

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.cfg.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _body(self, request: ReasoningRequest, correction: Optional[str]) -> dict:
        user_parts = [
            "Scene observation:",
            request.observation_text,
            "",
            "Map information: " + request.map_digest,
            "Allowed behaviors: " + ", ".join(request.allowed_behaviors),
        ]
        if request.guidance_text:
            user_parts += ["", "Passenger guidance: " + request.guidance_text]
        messages = [
            {"role": "system", "content": request.system_prompt},
            {"role": "user", "content": "\n".join(user_parts)},
        ]
        if correction:
            messages.append({"role": "user", "content": correction})
        return {
            "model": self.cfg.model,
            "messages": messages,
            "tools": [
                {
                    "type": "function",
                    "function": {
                        "name": FUNCTION_NAME,
                        "description": "Report the immobilization analysis and the recovery plan.",
                        "parameters": PLAN_FUNCTION_SCHEMA,
                    },
                }
            ],
            "tool_choice": {"type": "function", "function": {"name": FUNCTION_NAME}},
        }

    def _post(self, body: dict) -> str:
        try:
            resp = httpx.post(
                self.cfg.endpoint,
                json=body,
                headers=self._headers(),
                timeout=self.cfg.timeout_s,
            )
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise BackendUnavailable(f"transport failure: {exc}") from None
        if resp.status_code != 200:
            raise BackendUnavailable(f"endpoint returned HTTP {resp.status_code}")
        try:
            payload = resp.json()
            return payload["choices"][0]["message"]["tool_calls"][0]["function"]["arguments"]
        except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
            raise SchemaViolation(f"response missing tool call: {exc}") from None

    def __call__(self, request: ReasoningRequest) -> ReasoningResponse:
        raw = self._post(self._body(request, None))
        retry = 0
        try:
            analysis, plan = _parse_arguments(raw)
        except SchemaViolation as exc:
            correction = (
                f"The previous {FUNCTION_NAME} call was invalid: {exc}. "
                "Call the function again with arguments that satisfy the declared schema."
            )
            raw = self._post(self._body(request, correction))
            retry = 1
            analysis, plan = _parse_arguments(raw)  # second violation propagates
        return ReasoningResponse(analysis=analysis, output=plan, raw=raw, retry_count=retry)
