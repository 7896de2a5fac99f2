# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled numerical kernels.

Same API and algorithms as _pykernels.py (the pure-numpy fallback): Sturm
counts with pivot floor, index-targeted bisection, pivoted tridiagonal
factor/solve (dgttrf/dgtts2 layout), and fixed-step RK4 for y'' = a(x) y.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

DEF TINY = 2.2250738585072014e-308  # smallest normal double


def pivot_floor(off2):
    """Pivot magnitude floor for the Sturm recurrence (dstebz convention)."""
    m = float(np.max(off2)) if len(off2) else 1.0
    return max(TINY, TINY * m)


cdef long _count_below(const double* diag, const double* off2, long n,
                       double x, double pivmin) noexcept nogil:
    # Under-floor pivots are clamped keeping their sign (exact zeros go
    # positive) so an eigenvalue exactly at x is not counted as below x.
    cdef double d
    cdef long cnt = 0, i
    d = diag[0] - x
    if fabs(d) < pivmin:
        d = -pivmin if d < 0 else pivmin
    if d < 0:
        cnt += 1
    for i in range(1, n):
        d = diag[i] - x - off2[i - 1] / d
        if fabs(d) < pivmin:
            d = -pivmin if d < 0 else pivmin
        if d < 0:
            cnt += 1
    return cnt


def sturm_counts(const double[::1] diag, const double[::1] off2, shifts, double pivmin):
    """Number of eigenvalues strictly below each shift."""
    cdef const double[::1] xs = np.ascontiguousarray(
        np.atleast_1d(np.asarray(shifts, dtype=np.float64)))
    out = np.empty(xs.shape[0], dtype=np.int64)
    cdef long[::1] ov = out
    cdef long n = diag.shape[0], m = xs.shape[0], j
    with nogil:
        for j in range(m):
            ov[j] = _count_below(&diag[0], &off2[0] if n > 1 else NULL,
                                 n, xs[j], pivmin)
    return out


def bisect_eigenvalues(const double[::1] diag, const double[::1] off2, double pivmin,
                       double lo, double hi, long k_lo, long m,
                       double tol, long maxit=256):
    """Eigenvalues with ascending indices k_lo .. k_lo+m-1 inside [lo, hi]."""
    los = np.full(m, lo)
    his = np.full(m, hi)
    cdef double[::1] lv = los, hv = his
    cdef long n = diag.shape[0], j, it
    cdef double mid
    cdef long cnt
    cdef bint pending
    with nogil:
        for it in range(maxit):
            pending = False
            for j in range(m):
                if hv[j] - lv[j] > tol:
                    pending = True
                    mid = 0.5 * (lv[j] + hv[j])
                    cnt = _count_below(&diag[0], &off2[0] if n > 1 else NULL,
                                       n, mid, pivmin)
                    if cnt > k_lo + j:
                        hv[j] = mid
                    else:
                        lv[j] = mid
            if not pending:
                break
    return 0.5 * (los + his)


def tridiag_factor(diag, off, double shift):
    """LU-factor (H - shift*I) with partial pivoting (dgttrf layout)."""
    d = np.asarray(diag, dtype=np.float64) - shift
    dl = np.array(off, dtype=np.float64)
    du = np.array(off, dtype=np.float64)
    cdef long n = len(d)
    du2 = np.zeros(max(n - 2, 0))
    ipiv = np.empty(n, dtype=np.int64)
    cdef double[::1] dv = d, dlv = dl, duv = du, du2v = du2
    cdef long[::1] pv = ipiv
    cdef long i
    cdef double fact, temp
    with nogil:
        for i in range(n - 1):
            if fabs(dv[i]) >= fabs(dlv[i]):
                pv[i] = i
                if dv[i] != 0.0:
                    fact = dlv[i] / dv[i]
                    dlv[i] = fact
                    dv[i + 1] = dv[i + 1] - fact * duv[i]
                if i < n - 2:
                    du2v[i] = 0.0
            else:
                pv[i] = i + 1
                fact = dv[i] / dlv[i]
                dv[i] = dlv[i]
                dlv[i] = fact
                temp = duv[i]
                duv[i] = dv[i + 1]
                dv[i + 1] = temp - fact * dv[i + 1]
                if i < n - 2:
                    du2v[i] = duv[i + 1]
                    duv[i + 1] = -fact * duv[i + 1]
        pv[n - 1] = n - 1
        for i in range(n):
            if dv[i] == 0.0:
                dv[i] = TINY
    return dl, d, du, du2, ipiv


def tridiag_solve(factors, b):
    """Solve (H - shift*I) x = b using factors from tridiag_factor."""
    dl, d, du, du2, ipiv = factors
    x = np.array(b, dtype=np.float64)
    cdef double[::1] dlv = dl, dv = d, duv = du, du2v = du2, xv = x
    cdef long[::1] pv = ipiv
    cdef long n = dv.shape[0], i
    cdef double temp
    with nogil:
        for i in range(n - 1):
            if pv[i] == i:
                xv[i + 1] = xv[i + 1] - dlv[i] * xv[i]
            else:
                temp = xv[i]
                xv[i] = xv[i + 1]
                xv[i + 1] = temp - dlv[i] * xv[i]
        xv[n - 1] = xv[n - 1] / dv[n - 1]
        if n > 1:
            xv[n - 2] = (xv[n - 2] - duv[n - 2] * xv[n - 1]) / dv[n - 2]
        for i in range(n - 3, -1, -1):
            xv[i] = (xv[i] - duv[i] * xv[i + 1] - du2v[i] * xv[i + 2]) / dv[i]
    return x


def rk4_linear2(const double[::1] a_half, double h, double y0, double yp0):
    """Integrate y'' = a(x) y by classical RK4 with fixed (signed) step h.

    a_half holds a() at x0, x0+h/2, x0+h, ... (2*nsteps + 1 values, in
    traversal order).  Returns the (y, y') trajectories at the step points.
    """
    cdef long nsteps = (a_half.shape[0] - 1) // 2
    y = np.empty(nsteps + 1)
    yp = np.empty(nsteps + 1)
    cdef double[::1] yv = y, pv = yp
    cdef double cy = y0, cp = yp0
    cdef double a0, am, a1, k1y, k1p, k2y, k2p, k3y, k3p, k4y, k4p
    cdef long k
    yv[0] = y0
    pv[0] = yp0
    with nogil:
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
            cy = cy + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            cp = cp + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            yv[k + 1] = cy
            pv[k + 1] = cp
    return y, yp
