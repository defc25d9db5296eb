#!/usr/bin/env python3
"""Benchmark: compiled core vs pure-numpy fallback on the hot kernels.

Times the weighted-Laplacian application (the CG inner loop), the upwind
flux divergence, and the outflow reduction on disk grids of increasing
resolution, then an end-to-end preconditioned CG solve with each backend
patched in.  Run from the repository root:

    python benchmarks/bench_backends.py
"""

import time

import numpy as np

import shorelake._core as core
from shorelake._core import numpy_backend
from shorelake import elliptic
from shorelake.geometry import DepthProfile, ScalarField, build_grid, unit_disk

try:
    from shorelake._core import _speedups
except ImportError:
    _speedups = None


def _time(fn, *args, repeat=30):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def kernel_benchmarks(h):
    profile = DepthProfile(unit_disk(), 1.0)
    grid = build_grid(profile, h)
    X, Y = grid.centers()
    op = elliptic.DiscreteWeightedLaplacian(grid, profile.depth(X, Y))
    rng = np.random.default_rng(0)
    u = np.where(grid.mask, rng.standard_normal(grid.mask.shape), 0.0)
    out = np.zeros_like(u)
    ny, nx = grid.mask.shape
    qx = rng.standard_normal((ny, nx + 1))
    qy = rng.standard_normal((ny + 1, nx))
    qx[:, 0] = qx[:, -1] = 0.0
    qy[0, :] = qy[-1, :] = 0.0

    rows = []
    impls = [("numpy", numpy_backend)] + ([("cython", _speedups)] if _speedups else [])
    for label, mod in impls:
        t_lap = _time(mod.apply_weighted_laplacian, u, op.wE, op.wW, op.wN,
                      op.wS, op.diag, op.inv_h2, out)
        t_adv = _time(mod.upwind_flux_divergence, u, qx, qy, 1.0 / grid.h, out)
        t_sum = _time(mod.outflow_sums, qx, qy, out)
        rows.append((label, grid.cell_count, t_lap, t_adv, t_sum))
    return rows


def end_to_end_solve(h, backend_mod):
    saved = core.apply_weighted_laplacian
    core.apply_weighted_laplacian = backend_mod.apply_weighted_laplacian
    try:
        profile = DepthProfile(unit_disk(), 1.0)
        grid = build_grid(profile, h)
        rhs = ScalarField.from_function(grid, lambda x, y: np.full(x.shape, -8.0))
        problem = elliptic.WeightedPoissonProblem(grid, profile, rhs)
        t0 = time.perf_counter()
        sol = elliptic.solve(problem)
        return time.perf_counter() - t0, sol.iterations
    finally:
        core.apply_weighted_laplacian = saved


def main():
    print(f"active backend at import: {core.backend_name()}")
    if _speedups is None:
        print("compiled core not built; benchmarking the numpy fallback only")

    print("\nper-call kernel times (microseconds)")
    print(f"{'h':>8} {'cells':>8} {'backend':>8} {'laplacian':>11} "
          f"{'upwind':>9} {'outflow':>9}")
    for h in (1 / 64, 1 / 128, 1 / 256):
        for label, cells, t_lap, t_adv, t_sum in kernel_benchmarks(h):
            print(f"{h:8.4f} {cells:8d} {label:>8} {t_lap * 1e6:11.1f} "
                  f"{t_adv * 1e6:9.1f} {t_sum * 1e6:9.1f}")

    print("\nend-to-end manufactured solve (disk, a=1, f=-8, tol 1e-10)")
    print(f"{'h':>8} {'backend':>8} {'seconds':>9} {'iters':>6}")
    for h in (1 / 64, 1 / 128):
        impls = [("numpy", numpy_backend)] + ([("cython", _speedups)] if _speedups else [])
        for label, mod in impls:
            wall, iters = end_to_end_solve(h, mod)
            print(f"{h:8.4f} {label:>8} {wall:9.3f} {iters:6d}")


if __name__ == "__main__":
    main()
