# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.

Operation-for-operation twin of ``_ref.py``. Compiled with fp-contract off
so results stay bit-identical to the pure-Python fallback.
"""

from libc.math cimport atan2, cos, sin, sqrt, tan, fabs, INFINITY

BACKEND = "compiled"

cdef double _PI = 3.141592653589793
cdef double _TWO_PI = 6.283185307179586


def bicycle_step(double x, double y, double heading, double speed,
                 double steer, double throttle, double brake, bint reverse,
                 double dt, double wheelbase, double steer_max,
                 double accel_gain, double brake_gain,
                 double v_max_fwd, double v_max_rev):
    cdef double accel = throttle * accel_gain
    if reverse:
        accel = -accel
    cdef double v = speed + accel * dt
    cdef double bd = brake * brake_gain * dt
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
    cdef double delta = steer * steer_max
    cdef double nx = x + v * cos(heading) * dt
    cdef double ny = y + v * sin(heading) * dt
    cdef double nh = heading + (v / wheelbase) * tan(delta) * dt
    if nh > _PI:
        nh = nh - _TWO_PI
    elif nh < -_PI:
        nh = nh + _TWO_PI
    return nx, ny, nh, v


def idm_accel(double v, double v_lead, double net_gap, double v0,
              double t_headway, double a_max, double b_comf, double s0,
              double b_emergency):
    cdef double dv = v - v_lead
    cdef double sstar = s0 + v * t_headway + v * dv / (2.0 * sqrt(a_max * b_comf))
    if sstar < 0.0:
        sstar = 0.0
    cdef double gap = net_gap
    if gap < 0.1:
        gap = 0.1
    cdef double r = v / v0
    cdef double r2 = r * r
    cdef double ratio = sstar / gap
    cdef double a = a_max * (1.0 - r2 * r2 - ratio * ratio)
    if a > a_max:
        a = a_max
    if a < -b_emergency:
        a = -b_emergency
    return a


cdef bint _sat_half_overlap(double ax, double ay, double ahx, double ahy,
                            double acos_, double asin_,
                            double bx, double by, double bhx, double bhy,
                            double bcos_, double bsin_):
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double bux = bcos_
    cdef double buy = bsin_
    cdef double bvx = -bsin_
    cdef double bvy = bcos_
    cdef double dist = fabs(dx * acos_ + dy * asin_)
    cdef double reach = ahx + bhx * fabs(bux * acos_ + buy * asin_) + bhy * fabs(bvx * acos_ + bvy * asin_)
    if dist > reach:
        return False
    dist = fabs(dx * -asin_ + dy * acos_)
    reach = ahy + bhx * fabs(bux * -asin_ + buy * acos_) + bhy * fabs(bvx * -asin_ + bvy * acos_)
    if dist > reach:
        return False
    return True


def rect_overlap(double ax, double ay, double ahx, double ahy, double ayaw,
                 double bx, double by, double bhx, double bhy, double byaw):
    cdef double acos_ = cos(ayaw)
    cdef double asin_ = sin(ayaw)
    cdef double bcos_ = cos(byaw)
    cdef double bsin_ = sin(byaw)
    if not _sat_half_overlap(ax, ay, ahx, ahy, acos_, asin_, bx, by, bhx, bhy, bcos_, bsin_):
        return False
    if not _sat_half_overlap(bx, by, bhx, bhy, bcos_, bsin_, ax, ay, ahx, ahy, acos_, asin_):
        return False
    return True


def project_polyline(double[:] xs, double[:] ys, double[:] cum,
                     double px, double py):
    cdef Py_ssize_t n = xs.shape[0]
    cdef double best_d2 = INFINITY
    cdef double best_s = 0.0
    cdef double best_lat = 0.0
    cdef double best_h = 0.0
    cdef Py_ssize_t i
    cdef double x0, y0, x1, y1, ex, ey, seg2, rx, ry, t, cx, cy, dx, dy, d2
    cdef double seg_len, cross
    for i in range(n - 1):
        x0 = xs[i]
        y0 = ys[i]
        x1 = xs[i + 1]
        y1 = ys[i + 1]
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
            seg_len = sqrt(seg2)
            best_s = cum[i] + t * seg_len
            cross = ex * ry - ey * rx
            best_lat = cross / seg_len
            best_h = atan2(ey, ex)
    return best_s, best_lat, best_h


def point_at_polyline(double[:] xs, double[:] ys, double[:] cum, double s):
    cdef Py_ssize_t n = xs.shape[0]
    cdef double total = cum[n - 1]
    if s <= 0.0:
        s = 0.0
    elif s >= total:
        s = total
    cdef Py_ssize_t i = 0
    while i < n - 2 and cum[i + 1] < s:
        i += 1
    cdef double x0 = xs[i]
    cdef double y0 = ys[i]
    cdef double x1 = xs[i + 1]
    cdef double y1 = ys[i + 1]
    cdef double c0 = cum[i]
    cdef double c1 = cum[i + 1]
    cdef double seg = c1 - c0
    cdef double t = (s - c0) / seg
    return x0 + t * (x1 - x0), y0 + t * (y1 - y0), atan2(y1 - y0, x1 - x0)
