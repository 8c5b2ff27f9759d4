"""Run configuration and tunable parameter sets.

Every constant that shapes vehicle behavior or scoring lives here as data so
runs are reproducible from a config file alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

DT_S = 0.05  # fixed tick, 20 Hz

# Immobilization detector thresholds: 4.5 km/h and a one second hold.
V_MIN_MPS = 1.25
DELTA_T_S = 1.0

ARRIVAL_RADIUS_M = 2.0
WAYPOINT_SPACING_M = 2.0
LANE_CHANGE_PENALTY_M = 5.0


@dataclass(frozen=True)
class VehicleParams:
    wheelbase_m: float = 2.8
    length_m: float = 4.8
    width_m: float = 2.0
    steer_max_rad: float = 0.61
    accel_gain: float = 3.0  # full throttle acceleration, m/s^2
    brake_gain: float = 8.0  # full brake deceleration, m/s^2
    v_max_fwd: float = 16.0
    v_max_rev: float = 3.0

    @property
    def half_length(self) -> float:
        return self.length_m / 2.0

    @property
    def half_width(self) -> float:
        return self.width_m / 2.0


@dataclass(frozen=True)
class IdmParams:
    v0: float = 8.33  # desired speed, defaults to the lane limit
    t_headway: float = 1.5
    s0: float = 2.0
    a_max: float = 2.0
    b_comf: float = 3.0
    b_emergency: float = 6.0


@dataclass(frozen=True)
class ControlParams:
    lat_kp: float = 0.8
    lat_ki: float = 0.0
    lat_kd: float = 0.3
    heading_gain: float = 1.4
    lon_kp: float = 0.5
    lon_ki: float = 0.05
    lon_kd: float = 0.0
    lane_change_duration_s: float = 3.0
    lane_change_ramp_s: float = 1.2
    lane_change_speed: float = 5.0
    reverse_speed: float = 1.0


@dataclass(frozen=True)
class PerceptionConfig:
    range_m: float = 60.0
    fov_half_angle_rad: float = math.pi / 2.0
    noise_enabled: bool = False
    sigma_distance_m: float = 0.2
    sigma_velocity_mps: float = 0.1


@dataclass(frozen=True)
class DecisionParams:
    standoff_m: float = 7.0        # net gap below which a stationary blocker forces Stop
    release_gap_m: float = 10.0    # latched Stop releases beyond this gap
    blocker_speed_mps: float = 0.1
    moving_release_mps: float = 0.5
    tc_lookahead_m: float = 30.0
    sign_stop_duration_s: float = 2.0
    sign_zone_m: float = 8.0
    route_change_lookahead_m: float = 10.0


@dataclass(frozen=True)
class RecoveryParams:
    v_min_mps: float = V_MIN_MPS
    delta_t_s: float = DELTA_T_S
    cooldown_s: float = 5.0
    lane_clear_margin_m: float = 15.0
    blocker_range_m: float = 30.0
    ped_yield_range_m: float = 15.0
    pass_margin_m: float = 2.0
    observation_max_entries: int = 20


@dataclass(frozen=True)
class MetricsParams:
    penalty_pedestrian: float = 0.50
    penalty_vehicle: float = 0.60
    penalty_static: float = 0.65
    penalty_red_light: float = 0.70
    penalty_route_deviation: float = 0.70
    penalty_timeout: float = 1.0
    comfort_accel: float = 3.0
    comfort_jerk: float = 5.0
    comfort_yaw_rate: float = 0.6
    efficiency_cap: float = 1.25
    nearby_radius_m: float = 30.0
    route_deviation_m: float = 8.0

    def penalty_for(self, kind: str) -> float:
        return {
            "collision_pedestrian": self.penalty_pedestrian,
            "collision_vehicle": self.penalty_vehicle,
            "collision_static": self.penalty_static,
            "red_light": self.penalty_red_light,
            "route_deviation": self.penalty_route_deviation,
            "timeout": self.penalty_timeout,
        }[kind]


@dataclass(frozen=True)
class LatencyConfig:
    mode: str = "fixed"  # zero | fixed | lognormal
    seconds: float = 2.8
    mu: float = 1.0
    sigma: float = 0.25


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str = "http://127.0.0.1:8320/v1/chat/completions"
    model: str = "gpt-4o"
    api_key_env: str = "STUCKSIM_LLM_API_KEY"
    timeout_s: float = 30.0


@dataclass(frozen=True)
class RunConfig:
    scenarios: tuple = ()               # names or paths; entries may carry guidance scripts
    recovery: str = "off"               # off | oracle | llm
    latency: LatencyConfig = LatencyConfig()
    seed: int = 7
    lockstep: bool = True
    output_dir: str = "runs"
    llm: Optional[LlmConfig] = None
    vehicle: VehicleParams = VehicleParams()
    idm: IdmParams = IdmParams()
    control: ControlParams = ControlParams()
    perception: PerceptionConfig = PerceptionConfig()
    decision: DecisionParams = DecisionParams()
    recovery_params: RecoveryParams = RecoveryParams()
    metrics: MetricsParams = MetricsParams()

    def validate(self) -> None:
        if self.recovery not in ("off", "oracle", "llm"):
            raise ValueError(f"unknown recovery mode: {self.recovery!r}")
        if self.recovery == "llm" and self.llm is None:
            raise ValueError("recovery=llm requires an llm endpoint config")
        if self.latency.mode not in ("zero", "fixed", "lognormal"):
            raise ValueError(f"unknown latency mode: {self.latency.mode!r}")
        if self.lockstep and self.latency.mode == "lognormal" and self.seed is None:
            raise ValueError("lockstep with lognormal latency needs a seed")


def _dataclass_from(cls, data: dict):
    fields = {f for f in cls.__dataclass_fields__}
    unknown = set(data) - fields
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**data)


def load_run_config(path: str | Path) -> RunConfig:
    """Parse a flat JSON run-config file."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = RunConfig()
    scenarios = []
    for entry in raw.get("scenarios", []):
        if isinstance(entry, str):
            scenarios.append({"scenario": entry, "guidance": ()})
        else:
            scenarios.append(
                {
                    "scenario": entry["scenario"],
                    "guidance": tuple((float(t), str(txt)) for t, txt in entry.get("guidance", [])),
                }
            )
    kwargs = {
        "scenarios": tuple(tuple(sorted(e.items())) for e in scenarios),
        "recovery": raw.get("recovery", cfg.recovery),
        "seed": int(raw.get("seed", cfg.seed)),
        "lockstep": bool(raw.get("lockstep", cfg.lockstep)),
        "output_dir": raw.get("output_dir", cfg.output_dir),
    }
    if "latency" in raw:
        kwargs["latency"] = _dataclass_from(LatencyConfig, raw["latency"])
    if "llm" in raw:
        kwargs["llm"] = _dataclass_from(LlmConfig, raw["llm"])
    for key, cls in (
        ("vehicle", VehicleParams),
        ("idm", IdmParams),
        ("control", ControlParams),
        ("perception", PerceptionConfig),
        ("decision", DecisionParams),
        ("recovery_params", RecoveryParams),
        ("metrics", MetricsParams),
    ):
        if key in raw:
            kwargs[key] = _dataclass_from(cls, raw[key])
    out = replace(cfg, **kwargs)
    out.validate()
    return out


def scenario_entries(cfg: RunConfig) -> list[dict]:
    """Expand the frozen scenario tuples back into dicts."""
    return [dict(items) for items in cfg.scenarios]
