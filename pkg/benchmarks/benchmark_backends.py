#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

The hot path of this package is the adaptive RK stepper inside shooting
solves: a single BVP-backed curvature grid triggers on the order of 1e4
short integrations.  This script times three representative workloads in a
fresh subprocess per backend (the flag is read at import time):

    integrate   2000 enzyme-model integrations over [0, 2]
    bvp         200 shooting solves
    grid        one 4x8 BVP-backed curvature field

Usage:
    python benchmarks/benchmark_backends.py
"""

import json
import os
import subprocess
import sys
import textwrap

WORKLOAD = textwrap.dedent(
    """
    import json, time
    import numpy as np
    from simcurv import systems as ss, ode, bvp, geometry as geo
    from simcurv.backend import backend_name
    from simcurv.grids import GridSpec

    system = ss.make_system("enzyme_mmh", {"eps": 0.01, "kappa": 1.5, "lambda": 0.5})
    lift = ss.constant_initial_value(system, 0.5)

    # warmup (jit compilation on the numba path)
    ode.integrate(system, [1.0, 0.4], (0.0, 0.1))
    bvp.solve_bvp(bvp.BvpProblem(system, 0.5, [1.0], lift))

    results = {"backend": backend_name()}

    t0 = time.perf_counter()
    for i in range(2000):
        ode.integrate(system, [1.0 + 1e-6 * i, 0.4], (0.0, 2.0))
    results["integrate_2000"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for i in range(200):
        bvp.solve_bvp(bvp.BvpProblem(system, 1.0, [0.5 + 1e-3 * i], lift))
    results["bvp_200"] = time.perf_counter() - t0

    grid = GridSpec((0, 2), 4, ((0.2, 2.8),), (8,))
    t0 = time.perf_counter()
    geo.curvature_field(system, lift, grid, mode="bvp", jobs=1)
    results["grid_4x8"] = time.perf_counter() - t0

    print(json.dumps(results))
    """
)


def run_backend(flag):
    env = dict(os.environ)
    env["SIMCURV_NUMBA"] = flag
    out = subprocess.run(
        [sys.executable, "-c", WORKLOAD], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    print("benchmarking kernels: numba vs pure-numpy fallback\n")
    numba = run_backend("1")
    numpy_ = run_backend("0")
    if numba["backend"] != "numba":
        print("numba unavailable; both runs used the numpy fallback")
    keys = [k for k in numba if k != "backend"]
    width = max(len(k) for k in keys)
    print(f"{'workload':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    print("-" * (width + 34))
    for k in keys:
        speed = numpy_[k] / numba[k]
        print(f"{k:<{width}}  {numba[k]:>9.3f}s  {numpy_[k]:>9.3f}s  {speed:>7.1f}x")


if __name__ == "__main__":
    main()
