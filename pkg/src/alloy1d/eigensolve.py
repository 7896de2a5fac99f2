"""Windowed eigenvalue extraction for symmetric tridiagonal matrices.

Everything is built on exact Sturm counts: the experiments only ever look
at a handful of eigenvalues inside narrow energy windows, and the windowed
count statistics need integer-exact answers, so bisection beats a QR
sweep of the full spectrum here.  The counting/bisection kernels live in
the compiled backend with a pure-numpy fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import (DegenerateEigenvalueError, ValidationError,
                     WindowTooLargeError)
from .hamiltonian import BoxHamiltonian

# Endpoint nudge for closed-window trace counts.
_EDGE = 1e-12
# Default ceiling on how many eigenvalues a windowed query may return.
DEFAULT_WINDOW_CAP = 4096


@dataclass(frozen=True)
class EigenPair:
    """One eigenvalue with its normalized eigenvector on the box grid.

    The vector carries the measure of the underlying model: for the
    continuum variant the discrete 2-norm is scaled by sqrt(h) so it
    approximates the L2 normalization on the box; for the lattice variant
    it is the plain 2-norm.
    """

    value: float
    vector: np.ndarray
    residual: float
    grid: np.ndarray
    h: float

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    def weight_at(self, lo: float, hi: float) -> float:
        """Mass of |v|^2 (in the carried measure) on grid points in [lo, hi]."""
        mask = (self.grid >= lo) & (self.grid <= hi)
        return float(np.sum(self.vector[mask] ** 2) * self.h)


def _off2(ham: BoxHamiltonian) -> tuple[np.ndarray, float]:
    off2 = ham.offdiag * ham.offdiag
    return off2, backend.pivot_floor(off2)


def sturm_count(ham: BoxHamiltonian, energy: float) -> int:
    """Number of eigenvalues strictly below energy."""
    off2, pivmin = _off2(ham)
    return int(backend.sturm_counts(ham.diag, off2,
                                    np.array([float(energy)]), pivmin)[0])


def sturm_count_many(ham: BoxHamiltonian, energies: np.ndarray) -> np.ndarray:
    """Vectorized sturm_count over a grid of energies."""
    off2, pivmin = _off2(ham)
    return np.asarray(backend.sturm_counts(
        ham.diag, off2, np.asarray(energies, dtype=np.float64), pivmin),
        dtype=np.int64)


def trace_indicator(ham: BoxHamiltonian, a: float, b: float) -> int:
    """Number of eigenvalues in the closed window [a, b].

    Endpoint inclusion is resolved by nudging both ends outward by
    1e-12 * max(1, |a|, |b|), so eigenvalues landing exactly on an
    endpoint are counted.
    """
    if a > b:
        raise ValidationError(f"window [{a}, {b}] is empty")
    nudge = _EDGE * max(1.0, abs(a), abs(b))
    off2, pivmin = _off2(ham)
    counts = backend.sturm_counts(
        ham.diag, off2, np.array([a - nudge, b + nudge]), pivmin)
    return int(counts[1] - counts[0])


def eigenvalues_in_window(ham: BoxHamiltonian, a: float, b: float,
                          tol: float = 1e-10,
                          cap: int = DEFAULT_WINDOW_CAP) -> np.ndarray:
    """All eigenvalues in [a, b] bracketed to width tol, ascending.

    Multiple (near-)degenerate eigenvalues are reported with multiplicity.
    Raises WindowTooLargeError when the window holds more than cap values.
    """
    if a > b:
        raise ValidationError(f"window [{a}, {b}] is empty")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    nudge = _EDGE * max(1.0, abs(a), abs(b))
    lo, hi = a - nudge, b + nudge
    off2, pivmin = _off2(ham)
    counts = backend.sturm_counts(ham.diag, off2, np.array([lo, hi]), pivmin)
    k_lo, k_hi = int(counts[0]), int(counts[1])
    m = k_hi - k_lo
    if m == 0:
        return np.empty(0)
    if m > cap:
        raise WindowTooLargeError(
            f"window [{a}, {b}] holds {m} eigenvalues, above the cap {cap}")
    vals = np.asarray(backend.bisect_eigenvalues(
        ham.diag, off2, pivmin, lo, hi, k_lo, m, tol))
    return np.sort(vals)


def eigenvalue_by_index(ham: BoxHamiltonian, k: int,
                        tol: float = 1e-10) -> float:
    """k-th eigenvalue (0-based ascending) by index-targeted bisection."""
    if not 0 <= k < ham.dim:
        raise ValidationError(f"index {k} outside 0..{ham.dim - 1}")
    lo, hi = ham.spectrum_bracket()
    off2, pivmin = _off2(ham)
    vals = backend.bisect_eigenvalues(ham.diag, off2, pivmin,
                                      lo - 1.0, hi + 1.0, k, 1, tol)
    return float(np.asarray(vals)[0])


def eigenvector(ham: BoxHamiltonian, energy: float,
                tol: float = 1e-8) -> EigenPair:
    """Eigenpair at an isolated eigenvalue near energy, by inverse iteration.

    Preconditions: exactly one eigenvalue within tol of energy (checked
    with Sturm counts; a multiple eigenvalue raises DegenerateEigenvalueError
    so the caller can record the replica as a near-degeneracy event
    instead of crashing the whole run).
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    off2, pivmin = _off2(ham)
    counts = backend.sturm_counts(
        ham.diag, off2, np.array([energy - tol, energy + tol]), pivmin)
    mult = int(counts[1] - counts[0])
    if mult == 0:
        raise ValidationError(
            f"no eigenvalue within {tol} of E={energy}")
    if mult > 1:
        raise DegenerateEigenvalueError(
            f"{mult} eigenvalues within {tol} of E={energy}")
    # Refine the shift before iterating: inverse iteration converges per
    # step by the ratio of distances to the two nearest eigenvalues, so a
    # tight shift makes two iterations plenty.
    k_lo = int(counts[0])
    e_ref = float(np.asarray(backend.bisect_eigenvalues(
        ham.diag, off2, pivmin, energy - tol, energy + tol, k_lo, 1,
        1e-13 * max(1.0, abs(energy))))[0])

    n = ham.dim
    scale = ham.norm_bound() + abs(e_ref)
    target = 1e-8 * scale
    v = np.empty(n)
    v[0::2] = 1.0
    v[1::2] = -1.0
    v /= np.linalg.norm(v)
    factors = backend.tridiag_factor(ham.diag, ham.offdiag, e_ref)
    value = e_ref
    residual = np.inf
    for _ in range(8):
        w = np.asarray(backend.tridiag_solve(factors, v))
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0.0:
            v = np.roll(v, 1)
            continue
        v = w / nw
        hv = ham.diag * v
        hv[:-1] += ham.offdiag * v[1:]
        hv[1:] += ham.offdiag * v[:-1]
        value = float(v @ hv)
        residual = float(np.linalg.norm(hv - value * v))
        if residual <= target:
            break
    if residual > target:
        raise DegenerateEigenvalueError(
            f"inverse iteration stalled at residual {residual:.3g} "
            f"(target {target:.3g}) near E={energy}")
    imax = int(np.argmax(np.abs(v)))
    if v[imax] < 0:
        v = -v
    weight = ham.h if ham.variant == "continuum" else 1.0
    v = v / (np.linalg.norm(v) * np.sqrt(weight))
    return EigenPair(value, v, residual, ham.grid, weight)
