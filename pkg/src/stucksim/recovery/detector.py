"""Immobilization detector: the gate in front of the reasoning pipeline."""

from __future__ import annotations

from ..av.perception import EgoStatus
from ..config import DELTA_T_S, V_MIN_MPS

_EPS = 1e-9


def detect_immobilization(status: EgoStatus, v_min: float = V_MIN_MPS, delta_t: float = DELTA_T_S) -> bool:
    """True when the trip is unfinished and speed has stayed below v_min
    continuously for at least delta_t. Below is strict; the hold is inclusive."""
    if status.destination_flag:
        return False
    if abs(status.speed) >= v_min:
        return False
    return status.stationary_timer >= delta_t - _EPS
