"""Time the numba kernels against their pure-numpy/python sources.

Run from the repository root:

    python benchmarks/bench_kernels.py [--repeats 7]

The two paths execute identical arithmetic (fastmath is off), so the
agreement column should sit at machine precision.  With QGPLAB_PURE_NUMPY
set only the fallback path exists and the comparison is skipped.
"""
import argparse
import time

import numpy as np

from qgplab import _kernels
from qgplab.profile import SolitonParams, default_grid, solve_profile
from qgplab.spectral import assemble_lc


def best_of(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def build_cases():
    params = SolitonParams(0.8, -3.0)
    grid = default_grid(params)
    op = assemble_lc(solve_profile(params, grid))
    eta0 = 1.0 - params.c ** 2 / 2.0
    b0 = 1.0 - params.kappa * params.c ** 2
    m = grid.n // 2
    rng = np.random.default_rng(0)
    b = rng.standard_normal(op.size)
    n = 8192
    eta = 0.6 * np.exp(-np.linspace(-4, 4, n) ** 2)
    v = 0.1 * np.sin(np.linspace(-4, 4, n))
    ex = np.gradient(eta)
    exx = np.gradient(ex)
    buffers = {}  # per-kernel output buffers so agreement compares real work

    def hydro_call(k):
        q, u = buffers.setdefault(id(k), (np.empty(n), np.empty(n)))
        k(eta, v, ex, exx, q, u)
        return q

    shift = op.diag[op.size // 2] - 0.1
    cases = [
        ("march_profile", f"m={m} sub=16",
         lambda k: k(eta0, b0, params.kappa, grid.dx, m, 16),
         _kernels.march_profile, _kernels.march_profile_py),
        ("sturm_count", f"n={op.size}",
         lambda k: k(op.diag, op.off, 0.0),
         _kernels.sturm_count, _kernels.sturm_count_py),
        ("tridiag_solve", f"n={op.size}",
         lambda k: k(op.diag, op.off, shift, b),
         _kernels.tridiag_solve, _kernels.tridiag_solve_py),
        ("hydro_nonlinear", f"n={n}",
         hydro_call,
         _kernels.hydro_nonlinear_numba, _kernels.hydro_nonlinear_numpy),
    ]
    return cases


def agreement(a, b):
    if isinstance(a, np.ndarray):
        return float(np.max(np.abs(a - b)))
    return abs(float(a) - float(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7,
                    help="best-of repeats per measurement")
    args = ap.parse_args()

    if _kernels.PURE_NUMPY:
        print("QGPLAB_PURE_NUMPY is set: numba path unavailable, "
              "timing the fallback only")
    print(f"{'kernel':<18} {'workload':<14} {'fallback':>10} {'numba':>10} "
          f"{'speedup':>8}  agreement")
    for name, work, call, fast, slow in build_cases():
        t_slow, r_slow = best_of(lambda: call(slow), args.repeats)
        if fast is None or _kernels.PURE_NUMPY:
            print(f"{name:<18} {work:<14} {t_slow * 1e3:>8.2f}ms {'-':>10} "
                  f"{'-':>8}")
            continue
        call(fast)  # compile before timing
        t_fast, r_fast = best_of(lambda: call(fast), args.repeats)
        print(f"{name:<18} {work:<14} {t_slow * 1e3:>8.2f}ms "
              f"{t_fast * 1e3:>8.2f}ms {t_slow / t_fast:>7.1f}x  "
              f"{agreement(r_slow, r_fast):.2e}")


if __name__ == "__main__":
    main()
