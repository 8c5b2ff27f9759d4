"""Reasoning pipeline driver: one gated invocation, one trace record."""

from __future__ import annotations

from typing import Optional

from ..backends.base import BackendUnavailable, ReasoningRequest, SchemaViolation
from ..backends.llm import load_prompt, prompt_hash
from ..av.command import BEHAVIOR_KINDS
from .observation import serialize_observation
from .types import PlanValidationError, SceneObservation, SolverOutput, TraceRecord

_SYSTEM_PROMPT: Optional[str] = None
_PROMPT_HASH: Optional[str] = None


def system_prompt() -> str:
    global _SYSTEM_PROMPT
    if _SYSTEM_PROMPT is None:
        _SYSTEM_PROMPT = load_prompt("system.txt") + "\n" + load_prompt("cot.txt")
    return _SYSTEM_PROMPT


def prompts_digest() -> str:
    global _PROMPT_HASH
    if _PROMPT_HASH is None:
        _PROMPT_HASH = prompt_hash()
    return _PROMPT_HASH


def run_pipeline(
    obs: SceneObservation,
    map_digest: str,
    guidance_text: Optional[str],
    backend,
    request_tick: int,
) -> tuple[SolverOutput, TraceRecord]:
    """Run one reasoning cycle through the backend.

    Total: the result is always None or a structurally valid plan; backend
    failures are recorded on the trace and yield None (fail closed).
    """
    observation_text = serialize_observation(obs)
    request = ReasoningRequest(
        system_prompt=system_prompt(),
        observation_text=observation_text,
        guidance_text=guidance_text,
        allowed_behaviors=BEHAVIOR_KINDS,
        map_digest=map_digest,
    )
    record = TraceRecord(
        request_tick=request_tick,
        branch="guided" if guidance_text else "autonomous",
        observation_text=observation_text,
        map_digest=map_digest,
        guidance_text=guidance_text,
        analysis=None,
        output=None,
        raw="",
        prompt_hash=prompts_digest(),
        backend=getattr(backend, "name", "unknown"),
    )
    try:
        response = backend(request)
    except BackendUnavailable as exc:
        record.error = f"backend_unavailable: {exc}"
        return None, record
    except SchemaViolation as exc:
        record.error = f"schema_violation: {exc}"
        return None, record

    record.analysis = response.analysis
    record.raw = response.raw
    record.retry_count = response.retry_count
    record.events = response.events

    output = response.output
    if output is not None:
        try:
            output.validate()
        except PlanValidationError as exc:
            record.error = f"schema_violation: {exc}"
            return None, record
    record.output = output
    return output, record
