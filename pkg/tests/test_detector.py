"""Immobilization detector: examples and the randomized boundary property."""

import random

from stucksim.av.perception import EgoStatus
from stucksim.config import DT_S
from stucksim.recovery.detector import detect_immobilization


def status_with(speed, timer_ticks, dest=False):
    return EgoStatus(
        x=0.0,
        y=0.0,
        heading=0.0,
        speed=speed,
        lane_id="b",
        s=0.0,
        stationary_timer=timer_ticks * DT_S,
        stationary_ticks=timer_ticks,
        full_stop_timer=0.0,
        destination_flag=dest,
        route_remaining_m=50.0,
        route_total_m=100.0,
        route_lane="b",
        speed_limit=8.33,
    )


def test_slow_sustained_fires():
    # 0.8 m/s held for 1.05 s
    assert detect_immobilization(status_with(0.8, 21))


def test_fast_never_fires():
    assert not detect_immobilization(status_with(2.0, 100))


def test_done_trip_never_fires():
    assert not detect_immobilization(status_with(0.0, 100, dest=True))


def test_boundary_exactly_one_second_fires():
    assert detect_immobilization(status_with(0.5, 20))
    assert not detect_immobilization(status_with(0.5, 19))


def test_boundary_exactly_vmin_does_not_count():
    assert not detect_immobilization(status_with(1.25, 40))


def simulate_gate(speeds, dest_flags, dt=DT_S, v_min=1.25, delta_t=1.0):
    """Run the real detector over a speed trace via the real timer update rule."""
    fired = []
    ticks = 0
    for v, dest in zip(speeds, dest_flags):
        ticks = ticks + 1 if abs(v) < v_min else 0
        fired.append(detect_immobilization(status_with(v, ticks, dest), v_min, delta_t))
    return fired


def oracle_gate(speeds, dest_flags, dt=DT_S, v_min=1.25, delta_t=1.0):
    """Independent oracle: count consecutive below-threshold samples."""
    import math

    need = math.ceil(round(delta_t / dt, 9))
    out = []
    run = 0
    for v, dest in zip(speeds, dest_flags):
        run = run + 1 if abs(v) < v_min else 0
        out.append((not dest) and run >= need)
    return out


def test_property_random_traces_match_oracle():
    rng = random.Random(20)
    violations = 0
    for _ in range(10_000):
        n = rng.randint(5, 60)
        speeds = []
        for _ in range(n):
            r = rng.random()
            if r < 0.35:
                speeds.append(rng.uniform(0.0, 1.24))
            elif r < 0.45:
                speeds.append(1.25)  # exact threshold
            elif r < 0.55:
                speeds.append(rng.uniform(1.2501, 1.3))
            else:
                speeds.append(rng.uniform(0.0, 10.0))
        dests = [rng.random() < 0.02 for _ in range(n)]
        if simulate_gate(speeds, dests) != oracle_gate(speeds, dests):
            violations += 1
    assert violations == 0


from hypothesis import given, settings
from hypothesis import strategies as st


@settings(max_examples=500, deadline=None)
@given(
    st.lists(
        st.one_of(
            st.floats(0.0, 1.249),
            st.just(1.25),
            st.floats(1.2501, 12.0),
        ),
        min_size=1,
        max_size=80,
    ),
    st.booleans(),
)
def test_gate_matches_oracle_hypothesis(speeds, dest):
    dests = [dest] * len(speeds)
    assert simulate_gate(speeds, dests) == oracle_gate(speeds, dests)
