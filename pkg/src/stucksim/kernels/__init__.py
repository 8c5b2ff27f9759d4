"""Hot per-tick numerics with a compiled core and a pure-Python fallback.

The compiled extension is preferred when present. Set ``STUCKSIM_PURE_PYTHON=1``
to force the fallback (used by the parity tests and the benchmark).
"""

import os

from . import _ref

if os.environ.get("STUCKSIM_PURE_PYTHON"):
    _impl = _ref
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _ref

BACKEND = _impl.BACKEND

bicycle_step = _impl.bicycle_step
idm_accel = _impl.idm_accel
rect_overlap = _impl.rect_overlap
project_polyline = _impl.project_polyline
point_at_polyline = _impl.point_at_polyline

__all__ = [
    "BACKEND",
    "bicycle_step",
    "idm_accel",
    "rect_overlap",
    "project_polyline",
    "point_at_polyline",
]
