"""Eigenvalue derivatives and local solution geometry.

Covers four layers that build on each other:

* gradients of simple eigenvalues in the disorder couplings, both exact
  (first-order perturbation in the eigenstate) and by tracked finite
  differences,
* quantitative separation of gradient pairs: 2x2 Jacobians, the
  pair-determinant lower bound, colinearity defects, and finite-difference
  Hessian norms against the local spectral gap,
* per-cell solution bases orthonormal in the single-site weighted inner
  product, the decomposition of an eigenvector in such a basis with its
  polar (r, theta, t) bookkeeping, and the cell-to-cell transfer matrices,
* the pair of quadratics tying the polar variables at two energies
  together, and the Sylvester resultant deciding their compatibility.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import backend
from .errors import (BasisError, ConditioningError, TrackingError,
                     ValidationError)
from .eigensolve import EigenPair, eigenvalues_in_window, sturm_count
from .hamiltonian import BoxHamiltonian, assemble_continuum, assemble_discrete
from .model import DisorderConfig, ModelSpec

_L1_TOL = 1e-10


# ---------------------------------------------------------------------------
# gradients


@dataclass(frozen=True)
class GradientVector:
    """Per-site derivatives of one simple eigenvalue in the couplings."""

    sites: np.ndarray
    components: np.ndarray
    value: float

    def __post_init__(self):
        s = np.asarray(self.sites, dtype=np.int64)
        c = np.asarray(self.components, dtype=np.float64)
        s.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "sites", s)
        object.__setattr__(self, "components", c)
        if len(s) != len(c):
            raise ValidationError("sites and components must align")

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.components)))

    def at(self, site: int) -> float:
        idx = np.nonzero(self.sites == site)[0]
        if len(idx) != 1:
            raise ValidationError(f"site {site} not in gradient support")
        return float(self.components[idx[0]])


def q_inner(f: np.ndarray, g: np.ndarray, q: np.ndarray,
            x: np.ndarray) -> float:
    """Weighted inner product: trapezoid quadrature of f*g*q on the grid x."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if not (len(f) == len(g) == len(q) == len(x)):
        raise ValidationError("q_inner needs all arrays on one common grid")
    return float(np.trapezoid(f * g * q, x))


def grad_hellmann_feynman(spec: ModelSpec, config: DisorderConfig,
                          pair: EigenPair) -> GradientVector:
    """Exact gradient of a simple eigenvalue: site n gets the single-site
    weighted mass of the eigenvector around n.

    Continuum: component n = <u, u>_{q(.-n)} over the box grid; discrete:
    sum_m a_{m-n} u(m)^2.  Components are nonnegative by construction.
    """
    u = pair.vector
    norm = float(np.sum(u * u) * pair.h)
    if abs(norm - 1.0) > 1e-6:
        raise ValidationError("eigenvector is not normalized in its measure")
    sites = config.sites
    comps = np.empty(len(sites))
    if spec.variant == "continuum":
        x = pair.grid
        uu = u * u
        for i, n in enumerate(sites):
            comps[i] = float(np.trapezoid(uu * spec.q(x - n), x))
    else:
        m = pair.grid.astype(np.int64)
        uu = u * u
        a = spec.a.a
        for i, n in enumerate(sites):
            total = 0.0
            for j, aj in enumerate(a):
                site_m = n + spec.a.start + j
                k = site_m - m[0]
                if 0 <= k < len(m) and aj != 0.0:
                    total += aj * uu[k]
            comps[i] = total
    return GradientVector(sites, comps, pair.value)


def _tracked_eigenvalue(ham: BoxHamiltonian, e_ref: float, gap: float) -> float:
    """Eigenvalue of ham nearest e_ref, required unique within half a gap."""
    vals = eigenvalues_in_window(ham, e_ref - 0.5 * gap, e_ref + 0.5 * gap,
                                 tol=1e-12)
    if len(vals) != 1:
        raise TrackingError(
            f"{len(vals)} eigenvalues within {0.5 * gap:.3g} of {e_ref}; "
            f"tracking is ambiguous")
    return float(vals[0])


def _locate(ham: BoxHamiltonian, energy: float) -> tuple[float, float]:
    """Eigenvalue nearest to energy and its gap to the rest of the spectrum."""
    lo, hi = ham.spectrum_bracket()
    off2 = ham.offdiag * ham.offdiag
    pivmin = backend.pivot_floor(off2)

    def by_index(idx: int) -> float:
        return float(np.asarray(backend.bisect_eigenvalues(
            ham.diag, off2, pivmin, lo - 1.0, hi + 1.0, idx, 1, 1e-12))[0])

    k = sturm_count(ham, energy)
    cands = [i for i in (k - 1, k) if 0 <= i < ham.dim]
    vals = [by_index(i) for i in cands]
    pick = int(np.argmin([abs(v - energy) for v in vals]))
    j, e_j = cands[pick], vals[pick]
    gaps = [abs(by_index(i) - e_j) for i in (j - 1, j + 1) if 0 <= i < ham.dim]
    gap = min(gaps) if gaps else (hi - lo + 2.0)
    return e_j, gap


def _assemble(spec: ModelSpec, config: DisorderConfig, h: float | None):
    if spec.variant == "continuum":
        if h is None:
            raise ValidationError("continuum assembly needs a mesh h")
        return assemble_continuum(spec, config, config.box_halfwidth, h)
    return assemble_discrete(spec, config, config.box_halfwidth)


def _bumped(config: DisorderConfig, site: int, amount: float) -> DisorderConfig:
    omega = config.omega.copy()
    idx = int(site - config.sites[0])
    omega[idx] += amount
    return replace(config, omega=omega)


def grad_finite_difference(spec: ModelSpec, config: DisorderConfig,
                           energy: float, delta: float,
                           h: float | None = None) -> GradientVector:
    """Centered-difference gradient of the tracked eigenvalue near energy.

    Each coupling is bumped by +-delta and the perturbed eigenvalue is the
    unique one within half the local spectral gap of the unperturbed value;
    a vanished or doubled match raises TrackingError instead of guessing.
    """
    if delta <= 0:
        raise ValidationError("delta must be positive")
    base = _assemble(spec, config, h)
    e0, gap = _locate(base, energy)
    if gap <= 4.0 * delta:
        raise TrackingError(
            f"spectral gap {gap:.3g} too small for delta={delta}")
    sites = config.sites
    comps = np.empty(len(sites))
    for i, n in enumerate(sites):
        e_plus = _tracked_eigenvalue(
            _assemble(spec, _bumped(config, n, delta), h), e0, gap)
        e_minus = _tracked_eigenvalue(
            _assemble(spec, _bumped(config, n, -delta), h), e0, gap)
        comps[i] = (e_plus - e_minus) / (2.0 * delta)
    return GradientVector(sites, comps, e0)


@dataclass(frozen=True)
class GradientNormReport:
    min_l1: float
    max_l1: float
    count: int


def gradient_norm_window(grads: list[GradientVector]) -> GradientNormReport:
    """Empirical range of gradient l1 norms over a sweep of replicas/boxes."""
    if not grads:
        raise ValidationError("no gradients given")
    norms = [g.l1 for g in grads]
    return GradientNormReport(min(norms), max(norms), len(norms))


def jacobian_2x2(g_e: GradientVector, g_ep: GradientVector,
                 gamma: int, gamma_p: int) -> float:
    """Determinant of the 2x2 block of two gradients at two sites."""
    if gamma == gamma_p:
        raise ValidationError("sites must differ")
    return (g_e.at(gamma) * g_ep.at(gamma_p)
            - g_e.at(gamma_p) * g_ep.at(gamma))


@dataclass(frozen=True)
class JacobianBoundReport:
    lhs: float
    rhs: float
    holds: bool


def max_jacobian_bound_check(u: np.ndarray, v: np.ndarray) -> JacobianBoundReport:
    """Pair-determinant lower bound for l1-normalized nonnegative vectors.

    lhs is the largest squared 2x2 determinant |u_j v_k - u_k v_j|^2 over
    site pairs; it dominates ||u - v||_1^2 / (4 n^5).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    n = len(u)
    if len(v) != n or n < 2:
        raise ValidationError("need two aligned vectors of length >= 2")
    if np.any(u < 0) or np.any(v < 0):
        raise ValidationError("vectors must be nonnegative")
    if (abs(np.sum(u) - 1.0) > _L1_TOL or abs(np.sum(v) - 1.0) > _L1_TOL):
        raise ValidationError("vectors must be l1-normalized within 1e-10")
    dets = np.outer(u, v) - np.outer(v, u)
    lhs = float(np.max(dets * dets))
    diff = float(np.sum(np.abs(u - v)))
    rhs = diff * diff / (4.0 * n ** 5)
    return JacobianBoundReport(lhs, rhs, lhs >= rhs)


def colinearity_defect(g_e: GradientVector, g_ep: GradientVector) -> float:
    """l1 distance of the l1-normalized gradients (0 for parallel pairs)."""
    n1, n2 = g_e.l1, g_ep.l1
    if n1 <= 0 or n2 <= 0:
        raise ValidationError("gradients must be nonzero")
    if not np.array_equal(g_e.sites, g_ep.sites):
        raise ValidationError("gradients live on different site sets")
    return float(np.sum(np.abs(g_e.components / n1 - g_ep.components / n2)))


def finite_difference_hessian(f, x0: np.ndarray, delta: float) -> np.ndarray:
    """Symmetric second-difference Hessian of a scalar function."""
    x0 = np.asarray(x0, dtype=np.float64)
    n = len(x0)
    hess = np.empty((n, n))
    f0 = f(x0)

    def at(bumps):
        x = x0.copy()
        for i, d in bumps:
            x[i] += d
        return f(x)

    for i in range(n):
        hess[i, i] = (at([(i, delta)]) - 2.0 * f0 + at([(i, -delta)])) / delta ** 2
        for j in range(i + 1, n):
            val = (at([(i, delta), (j, delta)]) - at([(i, delta), (j, -delta)])
                   - at([(i, -delta), (j, delta)])
                   + at([(i, -delta), (j, -delta)])) / (4.0 * delta ** 2)
            hess[i, j] = hess[j, i] = val
    return hess


@dataclass(frozen=True)
class HessianBoundReport:
    hess_norm: float       # entrywise-sum bound on the max-to-l1 operator norm
    spectral_dist: float   # gap to the rest of the spectrum
    product: float         # hess_norm * spectral_dist, the bounded statistic
    support_sites: np.ndarray


def hessian_bound_check(spec: ModelSpec, config: DisorderConfig,
                        pair: EigenPair, delta: float,
                        h: float | None = None,
                        support_tol: float = 1e-12) -> HessianBoundReport:
    """Finite-difference Hessian of the eigenvalue on its gradient support.

    The operator norm from sup-normed inputs to an l1-normed output is
    bounded above by the entrywise absolute sum, which is what we report
    (the exact norm is a sign-pattern maximization; the surrogate is within
    a factor of it and monotone in the entries).  The useful statistic is
    the product with the local spectral gap.
    """
    base = _assemble(spec, config, h)
    e0, gap = _locate(base, pair.value)
    if gap <= 4.0 * delta:
        raise TrackingError(f"spectral gap {gap:.3g} too small for delta={delta}")
    grad = grad_hellmann_feynman(spec, config, pair)
    mask = grad.components > support_tol
    support = grad.sites[mask]
    if len(support) == 0:
        raise ValidationError("gradient support is empty at the given tolerance")

    def tracked(x: np.ndarray) -> float:
        cfg = config
        for site, val in zip(support, x):
            cfg = _bumped(cfg, int(site), float(val))
        return _tracked_eigenvalue(_assemble(spec, cfg, h), e0, gap)

    hess = finite_difference_hessian(tracked, np.zeros(len(support)), delta)
    norm = float(np.sum(np.abs(hess)))
    return HessianBoundReport(norm, gap, norm * gap, support)


# ---------------------------------------------------------------------------
# cell bases and transfer matrices


@dataclass(frozen=True)
class CellBasis:
    """Orthonormal local solution basis on the cell (n-N, n+N).

    e1/e2 with their derivatives are sampled on the cell grid x (absolute
    coordinates, uniform step, center x = n included); orthonormality is in
    the inner product weighted by the single-site profile centered at n,
    evaluated with the same trapezoid rule stored in `weight`.
    """

    site: int
    energy: float
    x: np.ndarray
    weight: np.ndarray
    e1: np.ndarray
    e1p: np.ndarray
    e2: np.ndarray
    e2p: np.ndarray
    gram: np.ndarray
    psi_norm: float
    phi_residual_norm: float

    def __post_init__(self):
        for name in ("x", "weight", "e1", "e1p", "e2", "e2p", "gram"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    def center_index(self) -> int:
        return int(np.argmin(np.abs(self.x - self.site)))

    def edge_matrix(self, side: str) -> np.ndarray:
        """Value/derivative matrix [[e1, e2], [e1', e2']] at a cell edge."""
        i = 0 if side == "left" else len(self.x) - 1
        return np.array([[self.e1[i], self.e2[i]],
                         [self.e1p[i], self.e2p[i]]])


def _cell_solution(spec: ModelSpec, config: DisorderConfig, n: int,
                   energy: float, h: float, y0: float, yp0: float):
    """Solve u'' = (V - E) u on (n-N, n+N) from the cell center outward."""
    half = spec.q.halfwidth
    nsteps = int(round(half / h))
    if abs(nsteps * h - half) > 1e-12 or nsteps < 2:
        raise ValidationError(f"cell step {h} must divide the half-width {half}")
    # forward leg n -> n+N, then backward leg n -> n-N with signed step
    xr_half = n + np.arange(2 * nsteps + 1) * (0.5 * h)
    xl_half = n - np.arange(2 * nsteps + 1) * (0.5 * h)
    from .model import evaluate_potential
    ar = evaluate_potential(spec, config, xr_half) - energy
    al = evaluate_potential(spec, config, xl_half) - energy
    yr, ypr = backend.rk4_linear2(ar, h, y0, yp0)
    yl, ypl = backend.rk4_linear2(al, -h, y0, yp0)
    y = np.concatenate([np.asarray(yl)[::-1], np.asarray(yr)[1:]])
    yp = np.concatenate([np.asarray(ypl)[::-1], np.asarray(ypr)[1:]])
    x = n + np.arange(-nsteps, nsteps + 1) * h
    return x, y, yp


def cell_basis(spec: ModelSpec, config: DisorderConfig, n: int,
               energy: float, h: float = 1.0 / 512) -> CellBasis:
    """Weighted-orthonormal solution basis on the cell around site n.

    Both independent solutions are integrated from the cell center with a
    fixed-step 4th-order one-step method: one with (value, slope) = (1, 0),
    one with (0, 1); the first is normalized in the weighted inner product
    and the second Gram-Schmidt-corrected against it.
    """
    if spec.variant != "continuum":
        raise ValidationError("cell bases are a continuum construction")
    x, psi, psip = _cell_solution(spec, config, n, energy, h, 1.0, 0.0)
    _, phi, phip = _cell_solution(spec, config, n, energy, h, 0.0, 1.0)
    w = spec.q(x - n)
    psi_norm = math.sqrt(max(q_inner(psi, psi, w, x), 0.0))
    if psi_norm <= 1e-12:
        raise BasisError(
            f"weighted norm of the even solution vanishes on cell {n}")
    e1 = psi / psi_norm
    e1p = psip / psi_norm
    proj = q_inner(phi, e1, w, x)
    r2 = phi - proj * e1
    r2p = phip - proj * e1p
    res_norm = math.sqrt(max(q_inner(r2, r2, w, x), 0.0))
    if res_norm <= 1e-12:
        raise BasisError(
            f"solutions are weighted-colinear on cell {n}")
    e2 = r2 / res_norm
    e2p = r2p / res_norm
    gram = np.array([[q_inner(e1, e1, w, x), q_inner(e1, e2, w, x)],
                     [q_inner(e2, e1, w, x), q_inner(e2, e2, w, x)]])
    return CellBasis(int(n), float(energy), x, w, e1, e1p, e2, e2p,
                     gram, psi_norm, res_norm)


@dataclass(frozen=True)
class PruferCell:
    """Coefficients of an eigenvector in one cell basis, with polar form.

    (C, D) = (A, B)/sqrt(normalizer) = r (sin theta, cos theta); the
    compressed slope t is tan(theta) on the "tan" branch (|A| <= |B|) and
    cot(theta) on the "cot" branch, so |t| <= 1 always.
    """

    site: int
    A: float
    B: float
    C: float
    D: float
    r: float
    theta: float
    t: float
    branch: str
    eps_bound: float
    cond: float


def _one_sided_derivative(u: np.ndarray, i: int, h: float) -> float:
    """4th-order one-sided first derivative at index i on a uniform grid."""
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    if i + 4 < len(u):
        return float(c @ u[i:i + 5])
    if i - 4 >= 0:
        return float(-(c @ u[i:i - 5 if i >= 5 else None:-1]))
    raise ValidationError("grid too short for a 4th-order one-sided stencil")


def decompose_in_cell(pair: EigenPair, basis: CellBasis,
                      normalizer: float | None = None) -> PruferCell:
    """Express an eigenvector in a cell basis and derive its polar data.

    (A, B) solve the 2x2 value/derivative match at the cell center, the
    derivative taken by a one-sided 4th-order stencil on the eigenvector
    grid.  The residual bound is the largest deviation between the
    eigenvector and its basis reconstruction over the shared grid points.
    With no explicit normalizer, (C, D) is the unit polar vector (r = 1).
    """
    n = basis.site
    idx = np.nonzero(np.abs(pair.grid - n) < 1e-9)[0]
    if len(idx) != 1:
        raise ValidationError(
            f"eigenvector grid has no point at the cell center {n}")
    i0 = int(idx[0])
    gh = float(pair.grid[1] - pair.grid[0])
    u0 = float(pair.vector[i0])
    up0 = _one_sided_derivative(pair.vector, i0, gh)
    center = basis.center_index()
    W = np.array([[basis.e1[center], basis.e2[center]],
                  [basis.e1p[center], basis.e2p[center]]])
    cond = float(np.linalg.cond(W))
    if not np.isfinite(cond) or cond > 1e12:
        raise ConditioningError(
            f"cell-center basis matrix nearly singular (cond {cond:.3g})")
    A, B = np.linalg.solve(W, np.array([u0, up0]))
    A, B = float(A), float(B)

    # residual over grid points shared by the eigenvector and the basis
    tol = 1e-9
    common_basis = []
    common_pair = []
    j = 0
    for i, xb in enumerate(basis.x):
        while j < len(pair.grid) and pair.grid[j] < xb - tol:
            j += 1
        if j < len(pair.grid) and abs(pair.grid[j] - xb) <= tol:
            common_basis.append(i)
            common_pair.append(j)
    if common_basis:
        rec = A * basis.e1[common_basis] + B * basis.e2[common_basis]
        eps = float(np.max(np.abs(pair.vector[common_pair] - rec)))
    else:
        eps = float("nan")

    norm2 = A * A + B * B
    if norm2 <= 0.0:
        raise ConditioningError("eigenvector vanishes to second order at the cell")
    nrm = norm2 if normalizer is None else float(normalizer)
    if nrm <= 0.0:
        raise ValidationError("normalizer must be positive")
    C = A / math.sqrt(nrm)
    D = B / math.sqrt(nrm)
    r = math.hypot(C, D)
    theta = math.atan2(A, B) % (2.0 * math.pi)
    if abs(A) <= abs(B):
        branch, t = "tan", A / B
    else:
        branch, t = "cot", B / A
    return PruferCell(n, A, B, C, D, r, theta, t, branch, eps, cond)


@dataclass(frozen=True)
class TransferPair:
    """Cell-to-cell coefficient maps between two adjacent cell bases.

    forward maps coefficients in the left basis to the right basis by
    matching value and derivative at the shared edge; backward is the
    reverse map.  M is the right basis' edge matrix at that point, N the
    left basis' one.
    """

    forward: np.ndarray
    backward: np.ndarray
    M: np.ndarray
    N: np.ndarray
    cond_M: float
    cond_N: float

    def __post_init__(self):
        for name in ("forward", "backward", "M", "N"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def det_forward(self) -> float:
        f = self.forward
        return float(f[0, 0] * f[1, 1] - f[0, 1] * f[1, 0])


def transfer_matrices(basis_left: CellBasis, basis_right: CellBasis) -> TransferPair:
    """Coefficient transfer between two cells sharing an edge point."""
    if basis_left.energy != basis_right.energy:
        raise ValidationError("transfer needs both bases at one energy")
    shared_right = basis_left.x[-1]
    shared_left = basis_right.x[0]
    if abs(shared_right - shared_left) > 1e-9:
        raise ValidationError(
            f"cells do not share an edge: {shared_right} vs {shared_left}")
    M = basis_right.edge_matrix("left")
    N = basis_left.edge_matrix("right")
    det_M = float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
    det_N = float(N[0, 0] * N[1, 1] - N[0, 1] * N[1, 0])
    if abs(det_M) < 1e-14 or abs(det_N) < 1e-14:
        raise ConditioningError("singular edge matrix in transfer computation")
    forward = np.linalg.solve(M, N)
    backward = np.linalg.solve(N, M)
    return TransferPair(forward, backward, M, N,
                        float(np.linalg.cond(M)), float(np.linalg.cond(N)))


# ---------------------------------------------------------------------------
# quadratics and resultant


def _propagated_norm_coeffs(T: np.ndarray) -> tuple[float, float, float]:
    """Coefficients (in t) of ||T (t, 1)^T||^2 = c2 t^2 + c1 t + c0."""
    c2 = T[0, 0] ** 2 + T[1, 0] ** 2
    c1 = 2.0 * (T[0, 0] * T[0, 1] + T[1, 0] * T[1, 1])
    c0 = T[0, 1] ** 2 + T[1, 1] ** 2
    return float(c2), float(c1), float(c0)


def propagated_norm(T: np.ndarray, t: float) -> float:
    """||T (t, 1)^T||^2, the squared norm of the propagated slope vector."""
    c2, c1, c0 = _propagated_norm_coeffs(T)
    return c2 * t * t + c1 * t + c0


def cell_quadratics(tpair_F: TransferPair, tpair_G: TransferPair, t_v: float,
                    branch_u: str = "tan",
                    branch_v: str = "tan") -> tuple[np.ndarray, np.ndarray]:
    """The two growth-matching quadratics in the slope t_u.

    R1 uses the forward transfer at the first energy, R2 the backward one;
    both subtract the propagated squared norm P(t_v) of the second energy's
    forward transfer:

        R(t_u) = (1 + t_v^2) * ||T (t_u, 1)^T||^2 - (1 + t_u^2) * P(t_v).

    Triples are (a2, a1, a0) with R = a2 t^2 + a1 t + a0.  The "cot"
    branches substitute the inverted slope: for t_v the propagated vector
    becomes (1, t_v)^T; for t_u the returned triple is reversed (the
    quadratic in 1/t_u scaled by t_u^2).
    """
    if abs(t_v) > 1.0 + 1e-12:
        raise ValidationError(f"|t_v| must be <= 1, got {t_v}")
    if branch_u not in ("tan", "cot") or branch_v not in ("tan", "cot"):
        raise ValidationError("branches must be 'tan' or 'cot'")
    TG = tpair_G.forward
    if branch_v == "tan":
        p_g = propagated_norm(TG, t_v)
    else:
        vec = TG @ np.array([1.0, t_v])
        p_g = float(vec @ vec)
    pref = 1.0 + t_v * t_v
    triples = []
    for T in (tpair_F.forward, tpair_F.backward):
        c2, c1, c0 = _propagated_norm_coeffs(T)
        triple = np.array([pref * c2 - p_g, pref * c1, pref * c0 - p_g])
        if branch_u == "cot":
            triple = triple[::-1].copy()
        triples.append(triple)
    return triples[0], triples[1]


def resultant_quadratics(p: np.ndarray, q: np.ndarray) -> float:
    """Sylvester resultant of two real polynomials of degree <= 2.

    Coefficients are highest-first triples (a2, a1, a0).  Exact zero
    leading coefficients reduce the degree, and the resultant of the
    reduced degrees is returned (for two constants the convention is 1.0
    if either is nonzero); only two identically-zero polynomials are
    rejected.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if len(p) != 3 or len(q) != 3:
        raise ValidationError("expect coefficient triples (a2, a1, a0)")

    def trim(c: np.ndarray) -> np.ndarray:
        i = 0
        while i < len(c) - 1 and c[i] == 0.0:
            i += 1
        return c[i:]

    pc, qc = trim(p), trim(q)
    m, n = len(pc) - 1, len(qc) - 1
    if m == 0 and n == 0:
        if pc[0] == 0.0 and qc[0] == 0.0:
            raise ValidationError("resultant of two zero polynomials")
        return 1.0
    if m == 0:
        return float(pc[0] ** n)
    if n == 0:
        return float(qc[0] ** m)
    size = m + n
    S = np.zeros((size, size))
    for i in range(n):
        S[i, i:i + m + 1] = pc
    for i in range(m):
        S[n + i, i:i + n + 1] = qc
    return float(np.linalg.det(S))


def dump_cells_csv(cells: list[PruferCell], path: str) -> None:
    """Diagnostic dump, one row per decomposed cell."""
    with open(path, "w", newline="") as fh:
        fh.write("#schema=alloy1d.cells.v1\n")
        writer = csv.writer(fh)
        writer.writerow(["n", "A", "B", "r", "theta", "t", "branch",
                         "eps_bound", "cond"])
        for c in cells:
            writer.writerow([c.site, repr(c.A), repr(c.B), repr(c.r),
                             repr(c.theta), repr(c.t), c.branch,
                             repr(c.eps_bound), repr(c.cond)])
