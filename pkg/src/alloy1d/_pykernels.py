"""Pure-numpy implementations of the numerical kernels.

This is the fallback used when the compiled extension (_kernels) is not
available; see backend.py for the selection logic.  Algorithms are identical
to the compiled versions: Sturm-sequence negative-pivot counting with the
LAPACK-style pivot floor, index-targeted bisection, pivoted tridiagonal
factor/solve, and a fixed-step RK4 integrator for y'' = a(x) y.

Layout conventions shared with the compiled module:
  diag  -- length n, matrix diagonal
  off2  -- length n-1, squared off-diagonal entries
  pivmin -- smallest pivot magnitude kept during the Sturm recurrence
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack as _lapack


def pivot_floor(off2: np.ndarray) -> float:
    """Pivot magnitude floor for the Sturm recurrence (dstebz convention)."""
    tiny = np.finfo(np.float64).tiny
    m = float(off2.max()) if len(off2) else 1.0
    return max(tiny, tiny * m)


def sturm_counts(diag: np.ndarray, off2: np.ndarray, shifts: np.ndarray,
                 pivmin: float) -> np.ndarray:
    """Number of eigenvalues strictly below each shift.

    Vectorized over shifts: the factorization recurrence runs once down the
    matrix carrying one pivot per shift.  Under-floor pivots are clamped to
    +-pivmin keeping their sign, with exact zeros clamped positive so an
    eigenvalue landing exactly on the shift is NOT counted as below it.
    """
    shifts = np.atleast_1d(np.asarray(shifts, dtype=np.float64))
    n = len(diag)
    d = np.full(len(shifts), diag[0]) - shifts
    np.copyto(d, np.where(d < 0, -pivmin, pivmin), where=np.abs(d) < pivmin)
    counts = (d < 0).astype(np.int64)
    for i in range(1, n):
        d = diag[i] - shifts - off2[i - 1] / d
        np.copyto(d, np.where(d < 0, -pivmin, pivmin),
                  where=np.abs(d) < pivmin)
        counts += d < 0
    return counts


def bisect_eigenvalues(diag: np.ndarray, off2: np.ndarray, pivmin: float,
                       lo: float, hi: float, k_lo: int, m: int,
                       tol: float, maxit: int = 256) -> np.ndarray:
    """Eigenvalues with ascending indices k_lo .. k_lo+m-1 inside [lo, hi].

    Caller guarantees count(lo) <= k_lo and count(hi) >= k_lo + m.  Each
    index is bisected independently; counts for all m midpoints are computed
    in one vectorized Sturm pass per iteration.
    """
    los = np.full(m, lo)
    his = np.full(m, hi)
    targets = k_lo + np.arange(m)
    for _ in range(maxit):
        if np.max(his - los) <= tol:
            break
        mids = 0.5 * (los + his)
        counts = sturm_counts(diag, off2, mids, pivmin)
        above = counts > targets
        np.copyto(his, mids, where=above)
        np.copyto(los, mids, where=~above)
    return 0.5 * (los + his)


def tridiag_factor(diag: np.ndarray, off: np.ndarray, shift: float):
    """LU-factor (H - shift*I) with partial pivoting (LAPACK dgttrf)."""
    d = np.asarray(diag, dtype=np.float64) - shift
    dl = np.asarray(off, dtype=np.float64).copy()
    du = np.asarray(off, dtype=np.float64).copy()
    dlf, df, duf, du2, ipiv, info = _lapack.dgttrf(dl, d, du)
    if info < 0:
        raise ValueError(f"dgttrf failed with info={info}")
    # info > 0 flags an exactly singular pivot; nudge it so inverse
    # iteration can still extract a direction.
    if info > 0:
        df = df.copy()
        df[df == 0.0] = np.finfo(np.float64).tiny
    return dlf, df, duf, du2, ipiv


def tridiag_solve(factors, b: np.ndarray) -> np.ndarray:
    """Solve (H - shift*I) x = b using factors from tridiag_factor."""
    dlf, df, duf, du2, ipiv = factors
    x, info = _lapack.dgttrs(dlf, df, duf, du2, ipiv, b)
    if info != 0:
        raise ValueError(f"dgttrs failed with info={info}")
    return x


def rk4_linear2(a_half: np.ndarray, h: float, y0: float, yp0: float):
    """Integrate y'' = a(x) y by classical RK4 with fixed step h.

    a_half holds a() sampled at x0, x0+h/2, x0+h, ... (2*nsteps + 1 values).
    h may be negative for backward integration, with a_half sampled in
    traversal order.  Returns the trajectories (y, y') at the step points.
    """
    nsteps = (len(a_half) - 1) // 2
    y = np.empty(nsteps + 1)
    yp = np.empty(nsteps + 1)
    y[0], yp[0] = y0, yp0
    cy, cp = float(y0), float(yp0)
    for k in range(nsteps):
        a0 = a_half[2 * k]
        am = a_half[2 * k + 1]
        a1 = a_half[2 * k + 2]
        k1y = cp
        k1p = a0 * cy
        k2y = cp + 0.5 * h * k1p
        k2p = am * (cy + 0.5 * h * k1y)
        k3y = cp + 0.5 * h * k2p
        k3p = am * (cy + 0.5 * h * k2y)
        k4y = cp + h * k3p
        k4p = a1 * (cy + h * k3y)
        cy += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        cp += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        y[k + 1] = cy
        yp[k + 1] = cp
    return y, yp
