"""Hill-equation machinery: monodromy, multipliers, exceptional energies.

The periodic reference problem y'' + W(x) y = lam * w(x) y (period 1,
weight w >= 0) controls which energies admit growing/decaying solutions.
Everything here is built on one primitive: integrating the fundamental
system over a single period with fixed-step RK4 and reading off the trace
of the period map.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import backend
from .errors import (ConditioningError, MeshError, MultiplierDomainError,
                     ValidationError)
from .model import ModelSpec

_MIN_STEPS = 256
_DEFAULT_STEPS = 512
_DET_TOL = 1e-10
_PARABOLIC_TOL = 1e-9
DEFAULT_EXCEPTIONAL_TOL = 1e-6


def _periodic_interp(samples: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linear interpolation of 1-periodic samples (sample i sits at i/n)."""
    s = np.asarray(samples, dtype=np.float64)
    n = len(s)
    if n == 1:
        return np.full(np.shape(x), float(s[0]))
    grid = np.arange(n + 1) / n
    vals = np.concatenate([s, s[:1]])
    return np.interp(np.mod(x, 1.0), grid, vals)


@dataclass(frozen=True)
class HillProblem:
    """One period of y'' + W y = lam * w y with nonnegative weight w.

    W and w are uniform samples over [0, 1) (sample i at x = i/n);
    single-sample arrays mean constant coefficients.
    """

    W: np.ndarray
    w: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        W = np.array(self.W, dtype=np.float64, ndmin=1)
        w = np.array(self.w, dtype=np.float64, ndmin=1)
        W.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "w", w)
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(w))):
            raise ValidationError("Hill coefficients must be finite")
        if np.any(w < 0):
            raise ValidationError("weight w must be nonnegative")
        if not np.any(w > 0):
            raise ValidationError("weight w must not vanish identically")

    @property
    def definite(self) -> bool:
        """True when w is bounded below by a positive constant."""
        return bool(np.min(self.w) > 0)

    def weight_integral(self) -> float:
        """Integral of w over one period (trapezoid on the periodic grid)."""
        return float(np.mean(self.w))

    def coefficient(self, x: np.ndarray, lam: float | None = None) -> np.ndarray:
        """a(x) = lam*w(x) - W(x), the coefficient of y'' = a y."""
        la = self.lam if lam is None else lam
        return la * _periodic_interp(self.w, x) - _periodic_interp(self.W, x)


@dataclass(frozen=True)
class FloquetData:
    """Period map of a Hill problem at one coupling value."""

    T: np.ndarray
    D: float
    mu_plus: complex
    mu_minus: complex
    regime: str  # "hyperbolic" | "parabolic" | "elliptic"
    lam: float

    def __post_init__(self):
        T = np.asarray(self.T, dtype=np.float64)
        T.setflags(write=False)
        object.__setattr__(self, "T", T)


def multipliers(D: float) -> tuple[complex, complex]:
    """Roots (mu+, mu-) of X^2 - D X + 1, mu+- = (D +- sqrt(D^2-4))/2.

    For |D| <= 2 the pair is complex conjugate on the unit circle.  In the
    hyperbolic case the large root is computed first and the small one by
    reciprocal, avoiding cancellation.
    """
    D = float(D)
    if abs(D) <= 2.0:
        im = math.sqrt(max(4.0 - D * D, 0.0)) / 2.0
        return complex(D / 2.0, im), complex(D / 2.0, -im)
    big = (D + math.copysign(math.sqrt(D * D - 4.0), D)) / 2.0
    small = 1.0 / big
    if D > 0:
        return complex(big), complex(small)
    return complex(small), complex(big)


def _classify(D: float) -> str:
    if abs(abs(D) - 2.0) <= _PARABOLIC_TOL:
        return "parabolic"
    return "hyperbolic" if abs(D) > 2.0 else "elliptic"


def _period_map(a_half: np.ndarray, h: float, lam: float) -> np.ndarray:
    """Integrate the fundamental system of y'' = a(x) y over one period."""
    phi, dphi = backend.rk4_linear2(a_half, h, 1.0, 0.0)
    psi, dpsi = backend.rk4_linear2(a_half, h, 0.0, 1.0)
    T = np.array([[phi[-1], psi[-1]], [dphi[-1], dpsi[-1]]])
    det = float(T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0])
    if abs(det - 1.0) > _DET_TOL:
        raise MeshError(
            f"Wronskian drift |det T - 1| = {abs(det - 1.0):.3g} at lam={lam}; "
            f"refine the integration step")
    return T


def monodromy(problem: HillProblem, lam: float | None = None,
              nsteps: int = _DEFAULT_STEPS) -> FloquetData:
    """Period map by RK4 integration of the fundamental system.

    Columns of T are the period-1 values of the solutions with initial
    data (1,0) and (0,1).  Raises MeshError below 256 steps per period.
    The step count is doubled (deterministically, up to 16x) whenever the
    Wronskian drifts beyond 1e-10 — high energies or strong couplings need
    finer steps than the default — and only a persistent drift raises.
    """
    if nsteps < _MIN_STEPS:
        raise MeshError(
            f"monodromy needs >= {_MIN_STEPS} steps per period, got {nsteps}")
    la = problem.lam if lam is None else float(lam)
    last_err: MeshError | None = None
    for n in (nsteps, 2 * nsteps, 4 * nsteps, 8 * nsteps, 16 * nsteps):
        h = 1.0 / n
        x_half = np.arange(2 * n + 1) * (0.5 * h)
        try:
            T = _period_map(problem.coefficient(x_half, la), h, la)
        except MeshError as exc:
            last_err = exc
            continue
        D = float(T[0, 0] + T[1, 1])
        mp, mm = multipliers(D)
        return FloquetData(T, D, mp, mm, _classify(D), la)
    raise last_err


def discriminant(problem: HillProblem, lam: float,
                 nsteps: int = _DEFAULT_STEPS) -> float:
    """Trace of the period map at coupling lam (no classification)."""
    return monodromy(problem, lam, nsteps).D


def periodized_weight(spec: ModelSpec, samples: int = 1024) -> np.ndarray:
    """Sum of integer translates of the single-site profile over [0, 1)."""
    if spec.variant != "continuum":
        raise ValidationError("periodized weight needs a continuum model")
    x = np.arange(samples) / samples
    out = np.zeros(samples)
    for n in range(-spec.q.halfwidth - 1, spec.q.halfwidth + 2):
        out += spec.q(x - n)
    return out


def hill_for_model(spec: ModelSpec, energy: float,
                   samples: int = 1024) -> HillProblem:
    """Reference Hill problem of a continuum model at a given energy.

    Restricting -u'' + q_per u + lam * sum_n q(.-n) u = E u to one period
    gives u'' + (E - q_per) u = lam * w u with w the periodized profile.
    """
    if spec.variant != "continuum":
        raise ValidationError("hill_for_model needs a continuum model")
    x = np.arange(samples) / samples
    W = energy - spec.q_per(x)
    return HillProblem(W, periodized_weight(spec, samples))


@dataclass(frozen=True)
class InstabilityReport:
    """Outcome of the hyperbolic-boundary search over a coupling bracket.

    status: "boundary"  - |D| = 2 crossing found and refined; lambda0 is it.
            "all-hyperbolic" - |D| > 2 on the whole bracket; lambda0 is the
                               bracket top.
            "not-found" - no hyperbolic coupling in the bracket; lambda0 None.
    hyperbolic_side: which side of lambda0 the certificate lies on.
    """

    lambda0: float | None
    status: str
    hyperbolic_side: str | None
    certificate_lam: np.ndarray
    certificate_D: np.ndarray


def instability_threshold(problem: HillProblem,
                          bracket: tuple[float, float] = (-20.0, 20.0),
                          grid_points: int = 401,
                          nsteps: int = _DEFAULT_STEPS,
                          refine_tol: float = 1e-10) -> InstabilityReport:
    """Locate the boundary of the hyperbolic (|D| > 2) coupling region.

    Samples |D(lam)| on a grid over the bracket, then bisects the edge of
    the hyperbolic region down to refine_tol.  The certificate rows are the
    sampled couplings that witnessed |D| > 2.
    """
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise ValidationError(f"empty bracket {bracket}")
    if grid_points < 3:
        raise ValidationError("grid needs at least 3 points")
    lams = np.linspace(lo, hi, grid_points)
    Ds = np.array([discriminant(problem, la, nsteps) for la in lams])
    hyper = np.abs(Ds) > 2.0
    cert_lam = lams[hyper]
    cert_D = Ds[hyper]
    if not hyper.any():
        return InstabilityReport(None, "not-found", None, cert_lam, cert_D)
    if hyper.all():
        return InstabilityReport(float(lams[-1]), "all-hyperbolic", "below",
                                 cert_lam, cert_D)
    # Edge of the hyperbolic region: first flip between consecutive samples.
    flips = np.nonzero(hyper[:-1] != hyper[1:])[0]
    i = int(flips[0])
    a, b = float(lams[i]), float(lams[i + 1])
    fa = abs(Ds[i]) - 2.0
    side = "below" if hyper[i] else "above"
    while b - a > refine_tol * max(1.0, abs(a), abs(b)):
        mid = 0.5 * (a + b)
        fm = abs(discriminant(problem, mid, nsteps)) - 2.0
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return InstabilityReport(0.5 * (a + b), "boundary", side,
                             cert_lam, cert_D)


@dataclass(frozen=True)
class TaylorCheck:
    measured_slope: float
    predicted_slope: float
    error: float
    degenerate: bool


def discriminant_taylor_check(energy: float, weight: np.ndarray,
                              delta: float = 1e-4,
                              nsteps: int = 1024) -> TaylorCheck:
    """First-order response of D to the coupling, against the closed form.

    Here the coupling enters as an additive potential,
    y'' + (W + lam*w) y = 0 with constant W = E: the classical band-edge
    parametrization, under which
    D(lam) = 2 cos(sqrt E) - lam * (integral of w) * sin(sqrt E)/sqrt E + o(lam).
    (The period-map routine keeps the weight on the right-hand side, so
    this probes it at couplings -lam.)  The measured slope is a centered
    difference at lam = 0; at E = (k pi)^2 the predicted slope vanishes and
    the check is flagged degenerate.  A zero weight is allowed here and
    gives slope exactly 0.
    """
    if energy <= 0:
        raise ValidationError("Taylor check needs E > 0")
    w = np.atleast_1d(np.asarray(weight, dtype=np.float64))
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValidationError("weight must be nonnegative and finite")
    if nsteps < _MIN_STEPS:
        raise MeshError(
            f"needs >= {_MIN_STEPS} steps per period, got {nsteps}")
    h = 1.0 / nsteps
    x_half = np.arange(2 * nsteps + 1) * (0.5 * h)
    w_half = _periodic_interp(w, x_half)

    def trace(lam: float) -> float:
        a_half = -energy - lam * w_half
        T = _period_map(a_half, h, lam)
        return float(T[0, 0] + T[1, 1])

    measured = (trace(delta) - trace(-delta)) / (2.0 * delta)
    root = math.sqrt(energy)
    predicted = -float(np.mean(w)) * math.sin(root) / root
    degenerate = exceptional_set(energy + 1.0).contains(energy)
    return TaylorCheck(measured, predicted, abs(measured - predicted),
                       degenerate)


@dataclass(frozen=True)
class ExceptionalSet:
    """Energies (k pi)^2 where the free discriminant degenerates to +-2."""

    energies: np.ndarray
    tol: float
    ceiling: float

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=np.float64)
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)

    def contains(self, energy: float) -> bool:
        if len(self.energies) == 0:
            return False
        return bool(np.min(np.abs(self.energies - energy)) <= self.tol)

    def parity(self, energy: float) -> int | None:
        """Parity of k for the member (k pi)^2 nearest energy, else None."""
        if not self.contains(energy):
            return None
        k = int(round(math.sqrt(max(energy, 0.0)) / math.pi))
        return k % 2


def exceptional_set(ceiling: float, tol: float = DEFAULT_EXCEPTIONAL_TOL,
                    covering: bool = False) -> ExceptionalSet:
    """All (k pi)^2 up to ceiling; empty for models with a covering profile."""
    if ceiling <= 0:
        raise ValidationError("ceiling must be positive")
    if covering:
        return ExceptionalSet(np.empty(0), tol, ceiling)
    k_max = int(math.floor(math.sqrt(ceiling) / math.pi))
    ks = np.arange(k_max + 1)
    return ExceptionalSet((ks * math.pi) ** 2, tol, ceiling)


@dataclass(frozen=True)
class DetMReport:
    """Nondegeneracy determinant with its exact two-term decomposition.

    value = a_term^2 + b_term, where a_term collapses the squared bracket
    of the cofactor expansion and b_term the cross bracket.  b_term is
    <= 0 (it carries a factor -(lam_G - 1/lam_G)^2), so positivity of the
    determinant is a genuine competition; `positive` records the outcome
    and `critical_coupling` the |p_G| threshold where it flips.
    """

    value: float          # 4x4 determinant, evaluated directly
    expansion: float      # (D1 D4 - D2 D3)^2 + (P- D1 - P+ D3)(P- D2 - P+ D4)
    a_term: float
    b_term: float
    positive: bool
    critical_coupling: float


def det_M_critical_coupling(lam_F: float, lam_G: float) -> float:
    """Largest |p_G| for which det_M stays positive at these multipliers.

    From the exact factorization
    det = D1*D2*lam_F^-4*(lam_G - 1/lam_G)^2 * [D1*D2*(lam_G + 1/lam_G)^2 - Pi+^2]
    the determinant is positive iff 4 p_G^2 (lam_F^2-1)^2 < D1*D2*(lam_G+1/lam_G)^2.
    """
    if not (abs(lam_F) > abs(lam_G) > 1.0):
        raise MultiplierDomainError(
            f"need |lam_F| > |lam_G| > 1, got |{lam_F}|, |{lam_G}|")
    lf2 = lam_F * lam_F
    lg2 = lam_G * lam_G
    d1d2 = (lf2 - lg2) * (lf2 - 1.0 / lg2)
    return math.sqrt(d1d2) * abs(lam_G + 1.0 / lam_G) / (2.0 * (lf2 - 1.0))


def det_M(lam_F: float, lam_G: float, p_G: float) -> DetMReport:
    """Nondegeneracy determinant of the 4x4 multiplier-matching system.

    Requires |lam_F| > |lam_G| > 1 (two genuinely hyperbolic multipliers).
    The direct 4x4 determinant and the cofactor expansion
    (D1 D4 - D2 D3)^2 + (P- D1 - P+ D3)(P- D2 - P+ D4) must agree to 1e-9
    relative.  The determinant is strictly positive exactly when
    |p_G| < critical_coupling(lam_F, lam_G); in particular always for
    p_G = 0, and for any p_G once the multipliers are well separated.
    """
    if not (abs(lam_F) > abs(lam_G) > 1.0):
        raise MultiplierDomainError(
            f"need |lam_F| > |lam_G| > 1, got |{lam_F}|, |{lam_G}|")
    lf2 = lam_F * lam_F
    lg2 = lam_G * lam_G
    ilf2 = 1.0 / lf2
    ilg2 = 1.0 / lg2
    d1 = lg2 - lf2
    pp = 2.0 * p_G * (1.0 - lf2)
    d2 = ilg2 - lf2
    d3 = ilg2 - ilf2
    pm = 2.0 * p_G * (1.0 - ilf2)
    d4 = lg2 - ilf2
    M = np.array([
        [d1, 0.0, d3, 0.0],
        [pp, d1, pm, d3],
        [d2, pp, d4, pm],
        [0.0, d2, 0.0, d4],
    ])
    value = float(np.linalg.det(M))
    expansion = (d1 * d4 - d2 * d3) ** 2 + (pm * d1 - pp * d3) * (pm * d2 - pp * d4)
    # Collapsed two-term form: the identities D3 = -D1/(lf2*lg2),
    # D4 = -D2*lg2/lf2, P- = -P+/lf2 reduce the brackets exactly.
    a_term = d1 * d2 * ilf2 * (lg2 - ilg2)
    b_term = -(pp * pp) * d1 * d2 * (ilf2 * ilf2) * (lam_G - 1.0 / lam_G) ** 2
    closed = a_term * a_term + b_term
    scale = max(1.0, abs(value))
    if abs(value - expansion) > 1e-9 * scale or abs(value - closed) > 1e-9 * scale:
        raise ConditioningError(
            f"determinant expansions disagree: {value} vs {expansion} vs {closed}")
    p_crit = det_M_critical_coupling(lam_F, lam_G)
    return DetMReport(value, float(expansion), float(a_term), float(b_term),
                      value > 0.0, p_crit)


@dataclass(frozen=True)
class SeparationReport:
    """Witness search for couplings where the two discriminants differ.

    status "witness" means margin = ||D1| - |D2|| > tol at lambda_star.
    exceptional flags whether each energy lies in the free exceptional set;
    same_parity is set only when both do.  A degenerate pair is searched
    anyway (the caller decides what to make of a refusal), with the caveat
    recorded.
    """

    lambda_star: float
    d1: float
    d2: float
    margin: float
    status: str  # "witness" | "no-witness"
    exceptional: tuple[bool, bool]
    same_parity: bool | None
    caveat: str | None


def separate_discriminants(E1: float, E2: float, weight: np.ndarray,
                           background: np.ndarray | None = None,
                           bracket: tuple[float, float] = (-20.0, 20.0),
                           grid_points: int = 2001,
                           tol: float = 1e-6,
                           nsteps: int = _DEFAULT_STEPS) -> SeparationReport:
    """Search for a coupling separating |D| of two energies.

    Maximizes ||D1(lam)| - |D2(lam)|| over a grid on the bracket, then
    refines by golden section.  With zero background, energies in the
    exceptional set are flagged (both discriminants start at +-2 with
    vanishing first-order response there, the classic obstruction) but the
    search still runs and reports whatever margin it finds.
    """
    if E1 == E2:
        raise ValidationError("energies must differ")
    p1 = (HillProblem(np.array([E1]), weight) if background is None
          else HillProblem(E1 - np.asarray(background, dtype=np.float64), weight))
    p2 = (HillProblem(np.array([E2]), weight) if background is None
          else HillProblem(E2 - np.asarray(background, dtype=np.float64), weight))

    exc = exceptional_set(max(abs(E1), abs(E2)) + 1.0)
    zero_background = background is None or not np.any(np.asarray(background))
    flags = ((exc.contains(E1), exc.contains(E2)) if zero_background
             else (False, False))
    same_parity = None
    caveat = None
    if all(flags):
        same_parity = exc.parity(E1) == exc.parity(E2)
        caveat = ("both energies are exceptional"
                  + (" with the same parity; separation may genuinely fail"
                     if same_parity else "; first-order separation degenerates"))
    elif any(flags):
        caveat = "one energy is exceptional; margin may be slim near 0"

    def gap(la: float) -> float:
        return abs(abs(discriminant(p1, la, nsteps))
                   - abs(discriminant(p2, la, nsteps)))

    lams = np.linspace(bracket[0], bracket[1], grid_points)
    gaps = np.array([gap(la) for la in lams])
    i = int(np.argmax(gaps))
    a = lams[max(i - 1, 0)]
    b = lams[min(i + 1, grid_points - 1)]
    # golden-section ascent on the bracketing triple
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = gap(c), gap(d)
    for _ in range(60):
        if b - a < 1e-10 * max(1.0, abs(a), abs(b)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = gap(c)
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = gap(d)
    best = 0.5 * (a + b)
    if gaps[i] > gap(best):
        best = float(lams[i])
    d1 = discriminant(p1, best, nsteps)
    d2 = discriminant(p2, best, nsteps)
    margin = abs(abs(d1) - abs(d2))
    status = "witness" if margin > tol else "no-witness"
    return SeparationReport(float(best), d1, d2, float(margin), status,
                            flags, same_parity, caveat)


def discriminant_sweep_csv(problem: HillProblem, lams: np.ndarray, path: str,
                           nsteps: int = _DEFAULT_STEPS) -> None:
    """CSV export (lam, D, regime) for band/gap structure plots."""
    with open(path, "w", newline="") as fh:
        fh.write("#schema=alloy1d.discriminant_sweep.v1\n")
        writer = csv.writer(fh)
        writer.writerow(["lam", "D", "regime"])
        for la in np.asarray(lams, dtype=np.float64):
            data = monodromy(problem, float(la), nsteps)
            writer.writerow([repr(float(la)), repr(data.D), data.regime])


def with_coupling(problem: HillProblem, lam: float) -> HillProblem:
    """Copy of the problem at a different coupling."""
    return replace(problem, lam=float(lam))
