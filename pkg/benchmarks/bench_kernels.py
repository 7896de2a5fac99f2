#!/usr/bin/env python3
"""Time the compiled kernels against the pure-numpy fallback.

Both modules expose the same API (see alloy1d.backend); this script runs the
four hot kernel families on identical inputs and reports the best-of-N wall
time for each, plus the speedup.  The fallback vectorizes Sturm counts over
shifts, so the compiled win there is modest; the sequential kernels
(bisection, RK4) gain one to two orders of magnitude.
"""

import argparse
import time

import numpy as np

from alloy1d import _pykernels

try:
    from alloy1d import _kernels
except ImportError:
    raise SystemExit("compiled extension not built; "
                     "run pip install -e . --no-build-isolation")


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def make_cases(n, shifts, steps, seed=7):
    rng = np.random.default_rng(seed)
    diag = rng.normal(size=n) * 2.0
    off = rng.normal(size=n - 1)
    off2 = off * off
    grid = np.linspace(-6.0, 6.0, shifts)
    a_half = rng.normal(size=2 * steps + 1)
    b = rng.normal(size=n)
    return diag, off, off2, grid, a_half, b


def bench(mod, case, repeats):
    diag, off, off2, grid, a_half, b = case
    n = len(diag)
    pivmin = mod.pivot_floor(off2)
    lo, hi = float(diag.min()) - 3.0, float(diag.max()) + 3.0
    k_lo, m = n // 2 - 16, 32
    out = {}
    out["sturm_counts"] = best_of(
        lambda: mod.sturm_counts(diag, off2, grid, pivmin), repeats)
    out["bisect_eigenvalues"] = best_of(
        lambda: mod.bisect_eigenvalues(diag, off2, pivmin, lo, hi, k_lo, m,
                                       1e-10), repeats)

    def factor_solve():
        factors = mod.tridiag_factor(diag, off, 0.5)
        for _ in range(8):
            mod.tridiag_solve(factors, b)

    out["tridiag_factor+solve"] = best_of(factor_solve, repeats)
    out["rk4_linear2"] = best_of(
        lambda: mod.rk4_linear2(a_half, 1.0 / ((len(a_half) - 1) // 2),
                                1.0, 0.0), repeats)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=8000,
                    help="tridiagonal size (default 8000)")
    ap.add_argument("--shifts", type=int, default=601,
                    help="Sturm shift count (default 601)")
    ap.add_argument("--steps", type=int, default=4096,
                    help="RK4 step count (default 4096)")
    ap.add_argument("--repeats", type=int, default=5,
                    help="best-of repeats (default 5)")
    args = ap.parse_args()

    case = make_cases(args.n, args.shifts, args.steps)
    py = bench(_pykernels, case, args.repeats)
    cy = bench(_kernels, case, args.repeats)

    print(f"n={args.n} shifts={args.shifts} steps={args.steps} "
          f"best of {args.repeats}")
    print(f"{'kernel':<24} {'python':>10}   {'compiled':>10}   speedup")
    for name in py:
        print(f"{name:<24} {py[name] * 1e3:>8.2f} ms {cy[name] * 1e3:>8.2f} ms"
              f" {py[name] / cy[name]:>8.1f}x")


if __name__ == "__main__":
    main()
