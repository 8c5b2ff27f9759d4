"""Pure-Python reference kernels.

These are the fallback implementations of the hot per-tick numerics. The
compiled twin in ``_fast.pyx`` performs the exact same floating-point
operations in the same order, so both backends produce bit-identical
results (asserted by the parity tests).
"""

from __future__ import annotations

import math

BACKEND = "python"

_PI = math.pi
_TWO_PI = 2.0 * math.pi


def bicycle_step(
    x: float,
    y: float,
    heading: float,
    speed: float,
    steer: float,
    throttle: float,
    brake: float,
    reverse: bool,
    dt: float,
    wheelbase: float,
    steer_max: float,
    accel_gain: float,
    brake_gain: float,
    v_max_fwd: float,
    v_max_rev: float,
) -> tuple[float, float, float, float]:
    """One kinematic bicycle update. Speed is signed (negative = backward)."""
    accel = throttle * accel_gain
    if reverse:
        accel = -accel
    v = speed + accel * dt
    bd = brake * brake_gain * dt
    if v > 0.0:
        v = v - bd
        if v < 0.0:
            v = 0.0
    elif v < 0.0:
        v = v + bd
        if v > 0.0:
            v = 0.0
    if v > v_max_fwd:
        v = v_max_fwd
    if v < -v_max_rev:
        v = -v_max_rev
    delta = steer * steer_max
    nx = x + v * math.cos(heading) * dt
    ny = y + v * math.sin(heading) * dt
    nh = heading + (v / wheelbase) * math.tan(delta) * dt
    if nh > _PI:
        nh = nh - _TWO_PI
    elif nh < -_PI:
        nh = nh + _TWO_PI
    return nx, ny, nh, v


def idm_accel(
    v: float,
    v_lead: float,
    net_gap: float,
    v0: float,
    t_headway: float,
    a_max: float,
    b_comf: float,
    s0: float,
    b_emergency: float,
) -> float:
    """Car-following acceleration with the desired-gap law floored at zero."""
    dv = v - v_lead
    sstar = s0 + v * t_headway + v * dv / (2.0 * math.sqrt(a_max * b_comf))
    if sstar < 0.0:
        sstar = 0.0
    gap = net_gap
    if gap < 0.1:
        gap = 0.1
    r = v / v0
    r2 = r * r
    ratio = sstar / gap
    a = a_max * (1.0 - r2 * r2 - ratio * ratio)
    if a > a_max:
        a = a_max
    if a < -b_emergency:
        a = -b_emergency
    return a


def _sat_half_overlap(ax, ay, ahx, ahy, acos, asin, bx, by, bhx, bhy, bcos, bsin):
    # Projects rectangle B onto A's axes; returns False on a separating axis.
    dx = bx - ax
    dy = by - ay
    # B's axis vectors in world frame
    bux = bcos
    buy = bsin
    bvx = -bsin
    bvy = bcos
    # axis 1: A's long axis (acos, asin)
    dist = abs(dx * acos + dy * asin)
    reach = ahx + bhx * abs(bux * acos + buy * asin) + bhy * abs(bvx * acos + bvy * asin)
    if dist > reach:
        return False
    # axis 2: A's short axis (-asin, acos)
    dist = abs(dx * -asin + dy * acos)
    reach = ahy + bhx * abs(bux * -asin + buy * acos) + bhy * abs(bvx * -asin + bvy * acos)
    if dist > reach:
        return False
    return True


def rect_overlap(
    ax: float,
    ay: float,
    ahx: float,
    ahy: float,
    ayaw: float,
    bx: float,
    by: float,
    bhx: float,
    bhy: float,
    byaw: float,
) -> bool:
    """Oriented rectangle intersection via the separating axis test."""
    acos = math.cos(ayaw)
    asin = math.sin(ayaw)
    bcos = math.cos(byaw)
    bsin = math.sin(byaw)
    if not _sat_half_overlap(ax, ay, ahx, ahy, acos, asin, bx, by, bhx, bhy, bcos, bsin):
        return False
    if not _sat_half_overlap(bx, by, bhx, bhy, bcos, bsin, ax, ay, ahx, ahy, acos, asin):
        return False
    return True


def project_polyline(xs, ys, cum, px: float, py: float) -> tuple[float, float, float]:
    """Closest point on a polyline.

    Returns (arc length, signed lateral offset, segment heading); lateral is
    positive to the left of the travel direction.
    """
    n = len(xs)
    best_d2 = math.inf
    best_s = 0.0
    best_lat = 0.0
    best_h = 0.0
    for i in range(n - 1):
        x0 = float(xs[i])
        y0 = float(ys[i])
        x1 = float(xs[i + 1])
        y1 = float(ys[i + 1])
        ex = x1 - x0
        ey = y1 - y0
        seg2 = ex * ex + ey * ey
        rx = px - x0
        ry = py - y0
        t = (rx * ex + ry * ey) / seg2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        cx = x0 + t * ex
        cy = y0 + t * ey
        dx = px - cx
        dy = py - cy
        d2 = dx * dx + dy * dy
        if d2 < best_d2:
            best_d2 = d2
            seg_len = math.sqrt(seg2)
            best_s = float(cum[i]) + t * seg_len
            cross = ex * ry - ey * rx
            best_lat = cross / seg_len
            best_h = math.atan2(ey, ex)
    return best_s, best_lat, best_h


def point_at_polyline(xs, ys, cum, s: float) -> tuple[float, float, float]:
    """Pose (x, y, heading) at arc length ``s``, clamped to the ends."""
    n = len(xs)
    total = float(cum[n - 1])
    if s <= 0.0:
        s = 0.0
    elif s >= total:
        s = total
    i = 0
    while i < n - 2 and float(cum[i + 1]) < s:
        i += 1
    x0 = float(xs[i])
    y0 = float(ys[i])
    x1 = float(xs[i + 1])
    y1 = float(ys[i + 1])
    c0 = float(cum[i])
    c1 = float(cum[i + 1])
    seg = c1 - c0
    t = (s - c0) / seg
    return x0 + t * (x1 - x0), y0 + t * (y1 - y0), math.atan2(y1 - y0, x1 - x0)
