"""Timing comparison of the numba kernels against the numpy fallbacks.

Run:  python3 benchmarks/bench_kernels.py
The numba path must be active (BALPHA_NUMBA unset or 1); the fallback
implementations are imported directly so both run in one process.
"""

import time

import numpy as np

from balpha import kernels
from balpha.kernels import (
    _flow_march_py,
    _invert_rows_py,
    _thomas_many_py,
    flow_march,
    invert_rows,
    thomas_solve_many,
)


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    print(f"active backend: {kernels.backend_name()}")
    rng = np.random.default_rng(0)

    # batched tridiagonal solves: the per-frame Helmholtz filter
    n, k = 401, 801
    lo = np.full(n, -1.0)
    up = np.full(n, -1.0)
    dg = np.full(n, 4.0)
    B = rng.normal(size=(k, n))
    thomas_solve_many(lo, dg, up, B)  # warm the JIT
    t_nb = timeit(thomas_solve_many, lo, dg, up, B)
    t_np = timeit(_thomas_many_py, lo, dg, up, B)
    print(f"thomas_solve_many  ({k}x{n}):  numba {t_nb*1e3:8.2f} ms   "
          f"numpy {t_np*1e3:8.2f} ms   speedup {t_np/t_nb:5.1f}x")

    # characteristic marching: the transport hot loop
    m, nz, kk = 800, 601, 1800
    zfr = 0.1 * rng.normal(size=(m + 1, nz))
    zfr[:, :3] = 0.0
    zfr[:, -3:] = 0.0
    lam_stage = 1.0 + 0.1 * rng.normal(size=(m, 4, 3))
    x_init = np.linspace(-2.0, 2.0, kk)
    flow_march(zfr, -1.0, 0.005, lam_stage, 1.0 / m, 4, x_init, 0)
    t_nb = timeit(flow_march, zfr, -1.0, 0.005, lam_stage, 1.0 / m, 4,
                  x_init, 0, repeat=3)
    t_np = timeit(_flow_march_py, zfr, -1.0, 0.005, lam_stage, 1.0 / m, 4,
                  x_init, 0, repeat=3)
    print(f"flow_march  ({m}x{kk}, 4 sub):  numba {t_nb*1e3:8.2f} ms   "
          f"numpy {t_np*1e3:8.2f} ms   speedup {t_np/t_nb:5.1f}x")

    # monotone-row inversion: transport composition
    xs = np.linspace(-2.0, 2.0, kk)
    rows = xs[None, :] + 0.3 * np.cumsum(
        0.01 + 0.001 * rng.random(size=(m + 1, kk)), axis=1
    ) / kk
    queries = np.linspace(-1.0, 1.0, 601)
    invert_rows(rows, xs, queries)
    t_nb = timeit(invert_rows, rows, xs, queries, repeat=3)
    t_np = timeit(_invert_rows_py, rows, xs, queries, repeat=3)
    print(f"invert_rows  ({m+1}x{kk} -> 601):  numba {t_nb*1e3:8.2f} ms   "
          f"numpy {t_np*1e3:8.2f} ms   speedup {t_np/t_nb:5.1f}x")


if __name__ == "__main__":
    main()
