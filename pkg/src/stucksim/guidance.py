"""Passenger guidance: message queue and the keyword interpreter.

The keyword grammar is the deterministic stand-in for free-form language
understanding so the guided path is fully testable offline; when the chat
backend is active the raw text passes through and the grammar is bypassed.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional

MAX_GUIDANCE_CHARS = 500


class RunNotActive(Exception):
    pass


@dataclass(frozen=True)
class GuidanceMessage:
    run_id: str
    sim_time: float
    text: str
    source: str = "script"  # cli | service | script

    def __post_init__(self):
        trimmed = self.text.strip()
        if not trimmed:
            raise ValueError("guidance text is empty")
        if len(self.text) > MAX_GUIDANCE_CHARS:
            raise ValueError(f"guidance text exceeds {MAX_GUIDANCE_CHARS} chars")


@dataclass(frozen=True)
class Directive:
    verb: str  # change_lane_left | change_lane_right | proceed_over | wait | reverse | ignore_obstacle
    obj: Optional[str] = None


@dataclass(frozen=True)
class GuidanceInterpretation:
    directives: tuple[Directive, ...]
    confidence: str  # matched | unmatched


# first-match-wins, checked in this order within each clause
_PHRASES = (
    (("drive over", "go over"), "proceed_over"),
    (("back up", "reverse"), "reverse"),
    (("wait",), "wait"),
    (("left",), "change_lane_left"),
    (("right",), "change_lane_right"),
    (("it's just", "its just", "trash", "bag"), "ignore_obstacle"),
)


def _split_clauses(text: str) -> list[str]:
    parts = []
    for chunk in text.replace(" then ", ",").split(","):
        chunk = chunk.strip()
        if chunk:
            parts.append(chunk)
    return parts


def interpret_keywords(text: str) -> GuidanceInterpretation:
    """Deterministic, total keyword interpretation of a guidance message."""
    directives: list[Directive] = []
    for clause in _split_clauses(text.lower()):
        for phrases, verb in _PHRASES:
            if any(p in clause for p in phrases):
                directives.append(Directive(verb=verb))
                break
    if not directives:
        return GuidanceInterpretation(directives=(), confidence="unmatched")
    return GuidanceInterpretation(directives=tuple(directives), confidence="matched")


@dataclass
class _Entry:
    message: GuidanceMessage
    state: str = "pending"  # pending | consumed | superseded


class GuidanceQueue:
    """Per-run message queue; enqueue may race with the sim loop reading."""

    def __init__(self, run_id: str):
        self.run_id = run_id
        self._lock = threading.Lock()
        self._entries: list[_Entry] = []
        self._active = True
        self._last_time = -1.0

    def close(self) -> None:
        with self._lock:
            self._active = False

    @property
    def active(self) -> bool:
        return self._active

    def enqueue(self, msg: GuidanceMessage) -> None:
        with self._lock:
            if not self._active:
                raise RunNotActive(self.run_id)
            if msg.sim_time < self._last_time:
                raise ValueError("guidance times must be non-decreasing")
            self._last_time = msg.sim_time
            self._entries.append(_Entry(message=msg))

    def has_pending(self) -> bool:
        with self._lock:
            return any(e.state == "pending" for e in self._entries)

    def take_pending(self) -> Optional[GuidanceMessage]:
        """Latest pending message wins; earlier ones are marked superseded."""
        with self._lock:
            pending = [e for e in self._entries if e.state == "pending"]
            if not pending:
                return None
            for e in pending[:-1]:
                e.state = "superseded"
            pending[-1].state = "consumed"
            return pending[-1].message

    def history(self) -> list[dict]:
        with self._lock:
            return [
                {
                    "sim_time": e.message.sim_time,
                    "text": e.message.text,
                    "source": e.message.source,
                    "state": e.state,
                }
                for e in self._entries
            ]
