"""Polyline and pose helpers shared by the world and the AV stack."""

from __future__ import annotations

import math

import numpy as np

from . import kernels


class Polyline:
    """Arc-length parameterized 2D polyline."""

    __slots__ = ("xs", "ys", "cum")

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise ValueError("polyline needs at least two (x, y) points")
        deltas = np.diff(pts, axis=0)
        seg = np.sqrt((deltas**2).sum(axis=1))
        if np.any(seg <= 0.0):
            raise ValueError("consecutive polyline points must be distinct")
        self.xs = np.ascontiguousarray(pts[:, 0])
        self.ys = np.ascontiguousarray(pts[:, 1])
        self.cum = np.concatenate(([0.0], np.cumsum(seg)))

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    def point_at(self, s: float) -> tuple[float, float, float]:
        """Pose (x, y, heading) at arc length s, clamped to the ends."""
        return kernels.point_at_polyline(self.xs, self.ys, self.cum, float(s))

    def project(self, x: float, y: float) -> tuple[float, float, float]:
        """(s, signed lateral offset, local heading) of the closest point."""
        return kernels.project_polyline(self.xs, self.ys, self.cum, float(x), float(y))


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    while a > math.pi:
        a -= 2.0 * math.pi
    while a <= -math.pi:
        a += 2.0 * math.pi
    return a


def rect_overlap(pose_a, half_a, pose_b, half_b) -> bool:
    ax, ay, ah = pose_a
    bx, by, bh = pose_b
    return kernels.rect_overlap(
        ax, ay, half_a[0], half_a[1], ah, bx, by, half_b[0], half_b[1], bh
    )
