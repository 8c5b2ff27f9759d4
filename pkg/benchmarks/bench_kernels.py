"""Benchmark the compiled kernel core against the pure-Python fallback.

Times the individual hot kernels on synthetic workloads, then a full
closed-loop scenario run through each backend. The two backends produce
bit-identical results (asserted by the parity tests); this script reports
the speed difference.

Run:  python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import math
import random
import time

import numpy as np

from stucksim.kernels import _ref

try:
    from stucksim.kernels import _fast
except ImportError:
    _fast = None


def bench(label, fn, args_list, repeats=3):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for args in args_list:
            fn(*args)
        best = min(best, time.perf_counter() - t0)
    rate = len(args_list) / best
    return best, rate


def kernel_workloads(n=200_000):
    rng = random.Random(42)
    bicycle = [
        (
            rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-3, 3), rng.uniform(0, 15),
            rng.uniform(-1, 1), rng.uniform(0, 1), 0.0, False,
            0.05, 2.8, 0.61, 3.0, 8.0, 16.0, 3.0,
        )
        for _ in range(n)
    ]
    idm = [
        (rng.uniform(0, 15), rng.uniform(0, 15), rng.uniform(0.5, 80), 8.33, 1.5, 2.0, 3.0, 2.0, 6.0)
        for _ in range(n)
    ]
    rects = [
        (
            rng.uniform(-10, 10), rng.uniform(-10, 10), 2.4, 1.0, rng.uniform(-3, 3),
            rng.uniform(-10, 10), rng.uniform(-10, 10), 2.4, 1.0, rng.uniform(-3, 3),
        )
        for _ in range(n)
    ]
    xs = np.linspace(0.0, 200.0, 24)
    ys = np.sin(xs / 40.0) * 8.0
    seg = np.sqrt(np.diff(xs) ** 2 + np.diff(ys) ** 2)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    proj = [(xs, ys, cum, rng.uniform(-10, 210), rng.uniform(-15, 15)) for _ in range(n // 4)]
    return {"bicycle_step": bicycle, "idm_accel": idm, "rect_overlap": rects, "project_polyline": proj}


def closed_loop_time(backend_env: bool) -> float:
    """Wall time for the oracle-recovery construction run under one backend."""
    import os
    import subprocess
    import sys

    env = dict(os.environ)
    if backend_env:
        env["STUCKSIM_PURE_PYTHON"] = "1"
    else:
        env.pop("STUCKSIM_PURE_PYTHON", None)
    code = (
        "import time\n"
        "from stucksim.world.scenario import load_bundled\n"
        "from stucksim.harness.runner import execute_scenario\n"
        "from stucksim.config import RunConfig\n"
        "cfg = RunConfig(seed=7, recovery='oracle')\n"
        "t0 = time.perf_counter()\n"
        "for name in ('construction', 'plastic_bag', 'lead_queue'):\n"
        "    execute_scenario(load_bundled(name, seed=7), cfg, run_id=name)\n"
        "print(time.perf_counter() - t0)\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main() -> int:
    if _fast is None:
        print("compiled kernels are not built; only the fallback is available")
        print("build them with: pip install -e . --no-build-isolation")
        return 1

    workloads = kernel_workloads()
    print(f"{'kernel':<20}{'python':>14}{'compiled':>14}{'speedup':>10}")
    for name, args_list in workloads.items():
        t_py, _ = bench(name, getattr(_ref, name), args_list)
        t_cy, _ = bench(name, getattr(_fast, name), args_list)
        print(f"{name:<20}{t_py*1e3:>11.1f} ms{t_cy*1e3:>11.1f} ms{t_py/t_cy:>9.1f}x")

    print()
    t_py = closed_loop_time(backend_env=True)
    t_cy = closed_loop_time(backend_env=False)
    print(f"{'closed-loop (3 runs)':<20}{t_py*1e3:>11.1f} ms{t_cy*1e3:>11.1f} ms{t_py/t_cy:>9.1f}x")
    print("\nbackends are bit-identical; see tests/test_kernels.py parity checks")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
