"""Operator families and disorder sampling.

Two families are supported:

* continuum: -d2/dx2 + q_per(x) + sum_n omega_n q(x - n) on an interval,
  with q a nonnegative piecewise-linear single-site profile and q_per a
  bounded 1-periodic background, and
* discrete: a periodic Jacobi matrix H_0 plus the lattice convolution
  V(m) = sum_n omega_n a_{m-n}.

The couplings omega_n are i.i.d. under a configurable law (uniform or a
piecewise-linear density table) and are produced by the counter-based
generator in rng.py, so the value at a site depends only on
(seed, replica, site).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import RangeError, ValidationError

# Grid density used when checking the two-sided single-site bound.
_CHECK_POINTS_PER_UNIT = 10_000
_CHECK_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SingleSitePotential:
    """Piecewise-linear single-site profile q with compact support.

    The table (breakpoints, values) defines q by linear interpolation
    between breakpoints; q is 0 strictly outside [breakpoints[0],
    breakpoints[-1]].  halfwidth is the integer N with supp q inside
    [-N, N]; positivity is the interval K on which q is bounded below
    by a positive constant.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    halfwidth: int
    positivity: tuple[float, float]

    def __post_init__(self):
        bp = _readonly(self.breakpoints)
        vals = _readonly(self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(bp) != len(vals) or len(bp) < 2:
            raise ValidationError("single-site table needs >= 2 matching rows")
        if np.any(np.diff(bp) <= 0):
            raise ValidationError("breakpoints must be strictly ascending")
        if self.halfwidth < 1:
            raise ValidationError(f"halfwidth must be >= 1, got {self.halfwidth}")

    @property
    def support(self) -> tuple[float, float]:
        """Interval J outside which q vanishes."""
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.breakpoints, self.values, left=0.0, right=0.0)

    def comparability_constant(self) -> float:
        """Smallest C >= 1 with q <= C on J and q >= 1/C on K.

        Returns inf when q is not bounded below by a positive constant
        on K (checked on a dense grid).
        """
        k_lo, k_hi = self.positivity
        grid = np.linspace(k_lo, k_hi,
                           max(int((k_hi - k_lo) * _CHECK_POINTS_PER_UNIT), 2))
        inf_k = float(np.min(self(grid)))
        sup_q = float(np.max(self.values))
        if inf_k <= _CHECK_TOL:
            return float("inf")
        return max(1.0, sup_q, 1.0 / inf_k)


@dataclass(frozen=True)
class PeriodicBackground:
    """1-periodic background potential, sampled on a uniform grid over [0,1).

    covering records whether the companion single-site profile is bounded
    below on an interval of length >= 1 (so its integer translates cover
    the line); it is filled in by ModelSpec.
    """

    samples: np.ndarray
    covering: bool = False

    def __post_init__(self):
        s = _readonly(self.samples)
        object.__setattr__(self, "samples", s)
        if len(s) < 1 or not np.all(np.isfinite(s)):
            raise ValidationError("background samples must be finite and nonempty")

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.samples == 0.0))

    def __call__(self, x) -> np.ndarray:
        pos = np.mod(x, 1.0)
        n = len(self.samples)
        grid = np.arange(n + 1) / n
        vals = np.concatenate([self.samples, self.samples[:1]])
        return np.interp(pos, grid, vals)


@dataclass(frozen=True)
class DiscreteSingleSite:
    """Finitely supported nonnegative profile a for the lattice convolution.

    a[j] sits at integer offset start + j.
    """

    a: np.ndarray
    start: int = 0

    def __post_init__(self):
        a = _readonly(self.a)
        object.__setattr__(self, "a", a)
        if len(a) == 0 or not np.all(np.isfinite(a)):
            raise ValidationError("profile a must be finite and nonempty")
        if np.any(a < 0):
            raise ValidationError("profile a must be nonnegative")
        if not np.any(a > 0):
            raise ValidationError("profile a must not be identically zero")

    @property
    def reach(self) -> int:
        """Largest |offset| at which a is defined."""
        return max(abs(self.start), abs(self.start + len(self.a) - 1))


@dataclass(frozen=True)
class DisorderLaw:
    """Law of the i.i.d. couplings: uniform on [lo, hi] or a density table.

    For kind="table", (breakpoints, density) define a piecewise-linear
    probability density; it must integrate to 1 within 1e-12.
    """

    kind: str
    lo: float = 0.0
    hi: float = 1.0
    breakpoints: np.ndarray | None = None
    density: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "uniform":
            if not (np.isfinite(self.lo) and np.isfinite(self.hi)
                    and self.lo <= self.hi):
                raise ValidationError(
                    f"uniform law needs lo <= hi, got [{self.lo}, {self.hi}]")
        elif self.kind == "table":
            bp = _readonly(self.breakpoints)
            dens = _readonly(self.density)
            object.__setattr__(self, "breakpoints", bp)
            object.__setattr__(self, "density", dens)
            if len(bp) != len(dens) or len(bp) < 2:
                raise ValidationError("density table needs >= 2 matching rows")
            if np.any(np.diff(bp) <= 0):
                raise ValidationError("density breakpoints must be ascending")
            if np.any(dens < 0) or not np.all(np.isfinite(dens)):
                raise ValidationError("density must be nonnegative and finite")
            total = float(np.trapezoid(dens, bp))
            if abs(total - 1.0) > 1e-12:
                raise ValidationError(
                    f"density integrates to {total!r}, expected 1 within 1e-12")
            object.__setattr__(self, "lo", float(bp[0]))
            object.__setattr__(self, "hi", float(bp[-1]))
        else:
            raise ValidationError(f"unknown law kind {self.kind!r}")

    @property
    def support_bound(self) -> float:
        """M with P(|omega_0| > M) = 0."""
        return max(abs(self.lo), abs(self.hi))

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        """Map Uniform(0,1) draws through the inverse CDF."""
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "uniform":
            return self.lo + (self.hi - self.lo) * u
        bp, dens = self.breakpoints, self.density
        widths = np.diff(bp)
        masses = 0.5 * (dens[:-1] + dens[1:]) * widths
        cdf = np.concatenate([[0.0], np.cumsum(masses)])
        cdf[-1] = 1.0
        seg = np.clip(np.searchsorted(cdf, u, side="right") - 1,
                      0, len(widths) - 1)
        d0 = dens[seg]
        slope = (dens[seg + 1] - dens[seg]) / widths[seg]
        rem = u - cdf[seg]
        # solve d0*t + slope*t^2/2 = rem on each segment
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = np.sqrt(np.maximum(d0 * d0 + 2.0 * slope * rem, 0.0))
            t_quad = (disc - d0) / slope
            t_lin = rem / d0
        t = np.where(np.abs(slope) > 1e-300, t_quad, t_lin)
        t = np.nan_to_num(t, nan=0.0, posinf=0.0, neginf=0.0)
        return bp[seg] + np.clip(t, 0.0, widths[seg])

    def cdf(self, x) -> np.ndarray:
        """Cumulative distribution function (used by goodness-of-fit tests)."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "uniform":
            if self.hi == self.lo:
                return (x >= self.lo).astype(float)
            return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        bp, dens = self.breakpoints, self.density
        widths = np.diff(bp)
        masses = 0.5 * (dens[:-1] + dens[1:]) * widths
        cdf = np.concatenate([[0.0], np.cumsum(masses)])
        seg = np.clip(np.searchsorted(bp, x, side="right") - 1,
                      0, len(widths) - 1)
        t = np.clip(x - bp[seg], 0.0, widths[seg])
        slope = (dens[seg + 1] - dens[seg]) / widths[seg]
        out = cdf[seg] + dens[seg] * t + 0.5 * slope * t * t
        return np.clip(np.where(x < bp[0], 0.0, np.where(x > bp[-1], 1.0, out)),
                       0.0, 1.0)


@dataclass(frozen=True)
class DisorderConfig:
    """One sampled realization of the couplings on a finite site range."""

    sites: np.ndarray
    omega: np.ndarray
    box_halfwidth: int
    seed: int
    replica: int

    def __post_init__(self):
        s = np.asarray(self.sites, dtype=np.int64)
        s.setflags(write=False)
        object.__setattr__(self, "sites", s)
        object.__setattr__(self, "omega", _readonly(self.omega))
        if len(s) != len(self.omega):
            raise ValidationError("sites and omega must align")

    def omega_at(self, n) -> np.ndarray:
        """Coupling value(s) at site index n; zero outside the sampled range."""
        n = np.asarray(n, dtype=np.int64)
        idx = n - int(self.sites[0])
        valid = (idx >= 0) & (idx < len(self.omega))
        return np.where(valid, self.omega[np.clip(idx, 0, len(self.omega) - 1)],
                        0.0)


@dataclass(frozen=True)
class ModelSpec:
    """Full description of one random operator family."""

    variant: str  # "continuum" | "discrete"
    law: DisorderLaw
    q: SingleSitePotential | None = None
    q_per: PeriodicBackground | None = None
    a: DiscreteSingleSite | None = None
    jacobi_diag: np.ndarray = field(default_factory=lambda: np.array([2.0]))
    jacobi_offdiag: np.ndarray = field(default_factory=lambda: np.array([-1.0]))

    def __post_init__(self):
        if self.variant == "continuum":
            if self.q is None:
                raise ValidationError("continuum model needs a single-site profile")
            if self.q_per is None:
                k_lo, k_hi = self.q.positivity
                object.__setattr__(
                    self, "q_per",
                    PeriodicBackground(np.zeros(1), covering=(k_hi - k_lo) >= 1.0))
        elif self.variant == "discrete":
            if self.a is None:
                raise ValidationError("discrete model needs a profile a")
            object.__setattr__(self, "jacobi_diag", _readonly(self.jacobi_diag))
            object.__setattr__(self, "jacobi_offdiag",
                               _readonly(self.jacobi_offdiag))
            if len(self.jacobi_diag) < 1 or len(self.jacobi_offdiag) < 1:
                raise ValidationError("periodic Jacobi coefficients are empty")
        else:
            raise ValidationError(f"unknown variant {self.variant!r}")

    @property
    def margin(self) -> int:
        """Sites within this distance of the box edge can still act on it."""
        return self.q.halfwidth if self.variant == "continuum" else self.a.reach

    def potential_sup_bound(self) -> float:
        """Uniform bound on |q_per + V_omega| over all configurations."""
        m = self.law.support_bound
        if self.variant == "discrete":
            return m * float(np.sum(self.a.a))
        x = np.linspace(0.0, 1.0, 2001)
        n_range = np.arange(-self.q.halfwidth - 1, self.q.halfwidth + 2)
        cover = np.sum([self.q(x - n) for n in n_range], axis=0)
        return m * float(np.max(cover)) + float(np.max(np.abs(self.q_per.samples)))

    # -- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        law: dict = {"kind": self.law.kind}
        if self.law.kind == "uniform":
            law.update(lo=self.law.lo, hi=self.law.hi)
        else:
            law.update(breakpoints=list(self.law.breakpoints),
                       density=list(self.law.density))
        doc: dict = {"variant": self.variant, "law": law}
        if self.variant == "continuum":
            doc["q"] = {
                "breakpoints": list(self.q.breakpoints),
                "values": list(self.q.values),
                "N": self.q.halfwidth,
                "K": list(self.q.positivity),
            }
            if not self.q_per.is_zero:
                doc["q_per"] = {"samples": list(self.q_per.samples)}
        else:
            doc["a"] = list(self.a.a)
            if self.a.start:
                doc["a_start"] = self.a.start
            doc["jacobi"] = {"diag": list(self.jacobi_diag),
                             "offdiag": list(self.jacobi_offdiag)}
        return doc

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ModelSpec":
        try:
            law_doc = doc["law"]
            if law_doc["kind"] == "uniform":
                law = DisorderLaw("uniform", lo=float(law_doc["lo"]),
                                  hi=float(law_doc["hi"]))
            elif law_doc["kind"] == "table":
                law = DisorderLaw("table",
                                  breakpoints=np.asarray(law_doc["breakpoints"]),
                                  density=np.asarray(law_doc["density"]))
            else:
                raise ValidationError(f"unknown law kind {law_doc['kind']!r}")
            variant = doc["variant"]
            if variant == "continuum":
                qd = doc["q"]
                q = SingleSitePotential(np.asarray(qd["breakpoints"]),
                                        np.asarray(qd["values"]),
                                        int(qd["N"]),
                                        (float(qd["K"][0]), float(qd["K"][1])))
                k_lo, k_hi = q.positivity
                covering = (k_hi - k_lo) >= 1.0
                qp_doc = doc.get("q_per")
                samples = (np.asarray(qp_doc["samples"], dtype=np.float64)
                           if qp_doc else np.zeros(1))
                return cls("continuum", law, q=q,
                           q_per=PeriodicBackground(samples, covering=covering))
            if variant == "discrete":
                a = DiscreteSingleSite(np.asarray(doc["a"]),
                                       start=int(doc.get("a_start", 0)))
                jac = doc.get("jacobi", {})
                return cls("discrete", law, a=a,
                           jacobi_diag=np.asarray(jac.get("diag", [2.0])),
                           jacobi_offdiag=np.asarray(jac.get("offdiag", [-1.0])))
            raise ValidationError(f"unknown variant {variant!r}")
        except (KeyError, TypeError, IndexError) as exc:
            raise ValidationError(f"malformed model document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_json_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate_model: named checks plus derived constants."""

    checks: tuple[tuple[str, bool, str], ...]
    constants: dict

    @property
    def ok(self) -> bool:
        return all(passed for _, passed, _ in self.checks)

    def lines(self) -> list[str]:
        out = [f"[{'PASS' if p else 'FAIL'}] {name}: {detail}"
               for name, p, detail in self.checks]
        for key, val in self.constants.items():
            out.append(f"       {key} = {val}")
        return out


def sample_disorder(spec: ModelSpec, box_halfwidth: int, seed: int,
                    replica: int) -> DisorderConfig:
    """Draw the couplings for every site that can act on the box [-L, L].

    Deterministic in (seed, replica); the value at a site does not depend
    on box_halfwidth, so enlarging the box extends the configuration
    without changing existing sites.
    """
    if box_halfwidth < 0:
        raise ValidationError(f"box_halfwidth must be >= 0, got {box_halfwidth}")
    reach = box_halfwidth + spec.margin
    sites = np.arange(-reach, reach + 1, dtype=np.int64)
    u = rng.site_uniform01(seed, replica, sites)
    return DisorderConfig(sites, spec.law.from_uniform(u),
                          box_halfwidth, seed, replica)


def evaluate_potential(spec: ModelSpec, config: DisorderConfig, x):
    """Total potential q_per(x) + sum_n omega_n q(x-n), or its lattice analogue.

    The sum runs exactly over the sites whose translate of the profile
    reaches x.  x may be a scalar or an array; it must lie within the
    sampled box plus margin.
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    reach = config.box_halfwidth + spec.margin
    if np.any(np.abs(x_arr) > reach + 1e-9):
        raise RangeError(
            f"position outside the sampled range [-{reach}, {reach}]")
    if spec.variant == "continuum":
        j_lo, j_hi = spec.q.support
        out = spec.q_per(x_arr).astype(np.float64)
        n_lo = int(np.ceil(x_arr.min() - j_hi))
        n_hi = int(np.floor(x_arr.max() - j_lo))
        for n in range(n_lo, n_hi + 1):
            qv = spec.q(x_arr - n)
            if np.any(qv != 0.0):
                out += config.omega_at(n) * qv
    else:
        m = np.rint(x_arr).astype(np.int64)
        if np.any(np.abs(m - x_arr) > 1e-9):
            raise RangeError("discrete model positions must be integers")
        out = np.zeros(len(m))
        for j, aj in enumerate(spec.a.a):
            if aj != 0.0:
                out += aj * config.omega_at(m - (spec.a.start + j))
    return out if np.ndim(x) else float(out[0])


def validate_model(spec: ModelSpec) -> ValidationReport:
    """Check every structural hypothesis and report pass/fail per item."""
    checks: list[tuple[str, bool, str]] = []
    constants: dict = {}

    try:
        total = (1.0 if spec.law.kind == "uniform"
                 else float(np.trapezoid(spec.law.density, spec.law.breakpoints)))
        checks.append(("law normalized", abs(total - 1.0) <= 1e-12,
                       f"density integral {total!r}"))
    except Exception as exc:  # pragma: no cover - constructor already gates
        checks.append(("law normalized", False, str(exc)))
    constants["support_bound_M"] = spec.law.support_bound

    if spec.variant == "continuum":
        q = spec.q
        j_lo, j_hi = q.support
        k_lo, k_hi = q.positivity
        checks.append(("q nonnegative", bool(np.all(q.values >= 0)),
                       f"min table value {float(np.min(q.values))}"))
        checks.append(("support inside [-N, N]",
                       j_lo >= -q.halfwidth - _CHECK_TOL
                       and j_hi <= q.halfwidth + _CHECK_TOL,
                       f"J = [{j_lo}, {j_hi}], N = {q.halfwidth}"))
        checks.append(("positivity interval nonempty", k_hi - k_lo > 0,
                       f"|K| = {k_hi - k_lo}"))
        checks.append(("K inside J",
                       k_lo >= j_lo - _CHECK_TOL and k_hi <= j_hi + _CHECK_TOL,
                       f"K = [{k_lo}, {k_hi}]"))
        c = q.comparability_constant()
        checks.append(("two-sided bound (1/C)1_K <= q <= C 1_J",
                       np.isfinite(c), f"C = {c}"))
        constants["comparability_C"] = c
        covering = (k_hi - k_lo) >= 1.0
        constants["covering"] = covering
        checks.append(("covering flag consistent",
                       spec.q_per.covering == covering,
                       f"flag {spec.q_per.covering}, derived {covering}"))
        hyp_h = spec.q_per.is_zero or covering
        checks.append(("hypothesis: zero background or covering profile",
                       hyp_h,
                       "background is zero" if spec.q_per.is_zero
                       else f"|K| = {k_hi - k_lo}"))
    else:
        a = spec.a.a
        checks.append(("a nonnegative, not identically zero",
                       bool(np.all(a >= 0) and np.any(a > 0)),
                       f"window length {len(a)} at offset {spec.a.start}"))
        checks.append(("Jacobi coefficients finite",
                       bool(np.all(np.isfinite(spec.jacobi_diag))
                            and np.all(np.isfinite(spec.jacobi_offdiag))),
                       f"periods {len(spec.jacobi_diag)}/{len(spec.jacobi_offdiag)}"))
        checks.append(("Jacobi off-diagonal nonzero",
                       bool(np.all(spec.jacobi_offdiag != 0)),
                       "tridiagonal structure irreducible"))

    constants["potential_sup_bound"] = spec.potential_sup_bound()
    return ValidationReport(tuple(checks), constants)


def unit_bump_model() -> ModelSpec:
    """The simplest covering-free example: q = 1 on (-1/4, 1/4), uniform law."""
    q = SingleSitePotential(np.array([-0.25, 0.25]), np.array([1.0, 1.0]),
                            halfwidth=1, positivity=(-0.25, 0.25))
    return ModelSpec("continuum", DisorderLaw("uniform", 0.0, 1.0), q=q)
