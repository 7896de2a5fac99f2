"""Monte Carlo spectral statistics for random box Hamiltonians.

Estimates the integrated density of states, unfolds eigenvalues near a
reference energy, and runs the statistical experiments: local level
statistics with Poisson diagnostics, single-interval hit ratios, close-pair
tail sums, and joint two-energy window/count experiments.

Every experiment is split into a module-level per-replica function (pure,
picklable, deterministic from its arguments) and an aggregator that folds
the per-replica results in replica order, so a process pool produces output
bit-identical to the serial path.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as sps

from .errors import UnfoldingError, ValidationError
from .eigensolve import eigenvalues_in_window, sturm_count_many, trace_indicator
from .hamiltonian import assemble_continuum, assemble_discrete, check_mesh
from .model import ModelSpec, sample_disorder

_NU_MIN_DEFAULT = 1e-3


def box_measure(spec: ModelSpec, box_halfwidth: int) -> float:
    """Length of the box: 2L for continuum intervals, 2L+1 lattice sites."""
    if spec.variant == "continuum":
        return 2.0 * box_halfwidth
    return 2.0 * box_halfwidth + 1.0


def _assemble(spec: ModelSpec, l: int, seed: int, replica: int,
              h: float | None):
    cfg = sample_disorder(spec, l, seed, replica)
    if spec.variant == "continuum":
        if h is None:
            raise ValidationError("continuum experiments need a mesh h")
        return assemble_continuum(spec, cfg, l, h)
    return assemble_discrete(spec, cfg, l)


def wilson_interval(hits: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValidationError("need at least one trial")
    p = hits / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# IDS


@dataclass(frozen=True)
class IDSTable:
    """Averaged counting function per unit length on an energy grid."""

    energy: np.ndarray
    N: np.ndarray
    nu: np.ndarray
    box_halfwidth: int
    replicas: int

    def __post_init__(self):
        for name in ("energy", "N", "nu"):
            # copy before freezing: never flip write flags on a caller's array
            a = np.array(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if np.any(np.diff(self.energy) <= 0):
            raise ValidationError("IDS grid must be strictly ascending")
        if np.any(np.diff(self.N) < -1e-12):
            raise ValidationError("IDS values must be nondecreasing")

    def N_at(self, e) -> np.ndarray:
        return np.interp(e, self.energy, self.N)

    def nu_at(self, e) -> np.ndarray:
        return np.interp(e, self.energy, self.nu)

    def inverse(self, n_val: float) -> float:
        """Energy where N first reaches n_val (linear between grid points)."""
        n_val = float(n_val)
        if n_val <= self.N[0]:
            return float(self.energy[0])
        if n_val >= self.N[-1]:
            return float(self.energy[-1])
        i = int(np.searchsorted(self.N, n_val, side="left"))
        n0, n1 = self.N[i - 1], self.N[i]
        if n1 <= n0:
            return float(self.energy[i])
        frac = (n_val - n0) / (n1 - n0)
        return float(self.energy[i - 1] + frac * (self.energy[i] - self.energy[i - 1]))

    def lipschitz_constant(self) -> float:
        """Largest difference quotient of N between consecutive grid points."""
        return float(np.max(np.diff(self.N) / np.diff(self.energy)))


def ids_replica(spec: ModelSpec, l: int, grid: np.ndarray, seed: int,
                replica: int, h: float | None) -> np.ndarray:
    """Eigenvalue counts below each grid energy for one disorder sample."""
    ham = _assemble(spec, l, seed, replica, h)
    return np.asarray(sturm_count_many(ham, np.asarray(grid, dtype=np.float64)),
                      dtype=np.float64)


def aggregate_ids(counts: list[np.ndarray], spec: ModelSpec, l: int,
                  grid: np.ndarray, bandwidth_points: int = 5) -> IDSTable:
    grid = np.asarray(grid, dtype=np.float64)
    measure = box_measure(spec, l)
    N = np.mean(counts, axis=0) / measure
    N = np.maximum.accumulate(N)
    # smoothed derivative: Gaussian kernel over the difference quotients
    raw = np.gradient(N, grid)
    half = 4 * bandwidth_points
    k = np.exp(-0.5 * (np.arange(-half, half + 1) / bandwidth_points) ** 2)
    nu = np.convolve(raw, k, mode="same") / np.convolve(
        np.ones_like(raw), k, mode="same")
    return IDSTable(grid, N, np.maximum(nu, 0.0), l, len(counts))


def estimate_ids(spec: ModelSpec, l: int, replicas: int, grid: np.ndarray,
                 seed: int, h: float | None = None,
                 law=None) -> IDSTable:
    """Monte Carlo IDS: mean count below E per unit box length.

    The IDS is estimated from the same discretized operator family used by
    the downstream experiments, so unfolding against it removes the O(h^2)
    spectral bias coherently.  `law` optionally overrides the disorder law
    (a frozen law reproduces deterministic references).
    """
    grid = np.asarray(grid, dtype=np.float64)
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("IDS grid must be strictly ascending")
    if l < 50:
        raise ValidationError(f"IDS box halfwidth must be >= 50, got {l}")
    if law is not None:
        spec = replace(spec, law=law)
    if spec.variant == "continuum":
        if h is None:
            raise ValidationError("continuum IDS needs a mesh h")
        check_mesh(h, float(np.max(np.abs(grid))), spec.potential_sup_bound(),
                   window_scale=1.0)
    counts = [ids_replica(spec, l, grid, seed, r, h) for r in range(replicas)]
    return aggregate_ids(counts, spec, l, grid)


# ---------------------------------------------------------------------------
# unfolding


@dataclass(frozen=True)
class PointSample:
    """Unfolded eigenvalues around one reference energy, one replica."""

    e0: float
    measure: float
    xi: np.ndarray
    replica: int

    def __post_init__(self):
        x = np.asarray(self.xi, dtype=np.float64)
        x.setflags(write=False)
        object.__setattr__(self, "xi", x)
        if len(x) and not np.all(np.isfinite(x)):
            raise ValidationError("unfolded points must be finite")
        if len(x) > 1 and np.any(np.diff(x) <= 0):
            raise UnfoldingError("unfolded points collide or are unsorted")


def unfold(eigs: np.ndarray, ids: IDSTable, e0: float, measure: float,
           replica: int = -1, nu_min: float = _NU_MIN_DEFAULT) -> PointSample:
    """Map eigenvalues through xi = measure * (N(E) - N(E0)).

    Refused when the smoothed density at e0 is at or below nu_min: the
    unfolding is only meaningful where the IDS is increasing.
    """
    nu0 = float(ids.nu_at(e0))
    if nu0 <= nu_min:
        raise UnfoldingError(
            f"density estimate {nu0:.3g} at E0={e0} is below the "
            f"unfolding threshold {nu_min}")
    eigs = np.sort(np.asarray(eigs, dtype=np.float64))
    xi = measure * (ids.N_at(eigs) - ids.N_at(e0))
    return PointSample(float(e0), float(measure), xi, replica)


def forward_gaps(xi: np.ndarray, inner_lo: float, inner_hi: float) -> np.ndarray:
    """Gaps from each point in [inner_lo, inner_hi] to its successor.

    Successors may lie beyond inner_hi; points without any successor in the
    sample are dropped (censoring), so keep the solve window well past
    inner_hi to make censoring negligible.
    """
    xi = np.asarray(xi, dtype=np.float64)
    idx = np.nonzero((xi >= inner_lo) & (xi <= inner_hi))[0]
    idx = idx[idx + 1 < len(xi)]
    return xi[idx + 1] - xi[idx]


def poisson_points(lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-intensity Poisson sample on [lo, hi], sorted."""
    n = rng.poisson(hi - lo)
    return np.sort(lo + (hi - lo) * rng.random(n))


# ---------------------------------------------------------------------------
# experiment configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared knobs for the windowed statistics experiments.

    The box scale l must sit inside [k L^alpha, L^alpha / k]; with the
    defaults L = l and alpha = 1 the constraint is void, which is the
    single-scale (level statistics) use.
    """

    l: int
    replicas: int
    seed: int
    L: int | None = None
    alpha: float = 1.0
    k: float = 1.0
    beta: float = 0.5
    eps: float = 0.1
    F: float = 0.7
    G: float = 1.2
    u_plus: tuple = ((-5.0, 0.0), (0.0, 5.0))
    u_minus: tuple = ((-5.0, 0.0), (0.0, 5.0))
    h: float | None = None
    w: float = 10.0
    nu_min: float = _NU_MIN_DEFAULT

    def __post_init__(self):
        if self.l < 1 or self.replicas < 1:
            raise ValidationError("need l >= 1 and replicas >= 1")
        if not (0.0 < self.k <= 1.0):
            raise ValidationError(f"k must be in (0, 1], got {self.k}")
        L = self.L if self.L is not None else self.l
        object.__setattr__(self, "L", L)
        scale = float(L) ** self.alpha
        if not (self.k * scale - 1e-9 <= self.l <= scale / self.k + 1e-9):
            raise ValidationError(
                f"box scale l={self.l} outside [k L^a, L^a/k] = "
                f"[{self.k * scale:.3g}, {scale / self.k:.3g}]")
        if self.F == self.G:
            raise ValidationError("the two reference energies must differ")


# ---------------------------------------------------------------------------
# level statistics


@dataclass(frozen=True)
class CountRecord:
    """Per-replica interval counts (and joint indicators when two-energy)."""

    replica: int
    counts_plus: tuple
    counts_minus: tuple = ()
    indicator_f: int = 0
    indicator_g: int = 0

    def __post_init__(self):
        for c in (*self.counts_plus, *self.counts_minus):
            if c < 0 or int(c) != c:
                raise ValidationError("counts must be nonnegative integers")


@dataclass(frozen=True)
class LevelStatsResult:
    e0: float
    window: tuple
    records: list
    samples: list
    gaps: np.ndarray
    mean_counts: np.ndarray
    intervals: tuple


def levelstats_replica(spec: ModelSpec, ids: IDSTable, e0: float,
                       config: ExperimentConfig, replica: int):
    """One box: solve the unfolded window [-w, w], count, and take gaps."""
    l = config.l
    measure = box_measure(spec, l)
    n0 = float(ids.N_at(e0))
    lo = ids.inverse(n0 - config.w / measure)
    hi = ids.inverse(n0 + config.w / measure)
    ham = _assemble(spec, l, config.seed, replica, config.h)
    eigs = eigenvalues_in_window(ham, lo, hi)
    sample = unfold(eigs, ids, e0, measure, replica, config.nu_min)
    counts = tuple(int(np.sum((sample.xi >= a) & (sample.xi < b)))
                   for a, b in config.u_plus)
    # forward gaps from the lower half-window; successors can use the rest
    gaps = forward_gaps(sample.xi, -config.w, 0.0)
    return CountRecord(replica, counts), sample, gaps


def aggregate_levelstats(results: list, e0: float,
                         config: ExperimentConfig) -> LevelStatsResult:
    records = [r[0] for r in results]
    samples = [r[1] for r in results]
    gaps = (np.concatenate([r[2] for r in results])
            if results else np.empty(0))
    mean_counts = (np.mean([r.counts_plus for r in records], axis=0)
                   if records else np.empty(0))
    return LevelStatsResult(e0, (-config.w, config.w), records, samples,
                            gaps, mean_counts, config.u_plus)


def level_statistics(spec: ModelSpec, e0: float, ids: IDSTable,
                     config: ExperimentConfig) -> LevelStatsResult:
    """Unfolded local statistics around e0 over config.replicas boxes."""
    results = [levelstats_replica(spec, ids, e0, config, r)
               for r in range(config.replicas)]
    return aggregate_levelstats(results, e0, config)


def exponential_ks(gaps: np.ndarray) -> tuple[float, float]:
    """KS statistic and p-value of the gap sample against Exp(1)."""
    if len(gaps) == 0:
        raise ValidationError("empty gap sample")
    res = sps.kstest(gaps, "expon")
    return float(res.statistic), float(res.pvalue)


# ---------------------------------------------------------------------------
# single-interval hit ratio (one eigenvalue) and close-pair tail


@dataclass(frozen=True)
class WegnerReport:
    probability: float
    ci: tuple
    ratio: float
    ratio_ci: tuple
    interval_width: float
    measure: float
    replicas: int


def wegner_replica(spec: ModelSpec, e: float, width: float, l: int,
                   seed: int, replica: int, h: float | None) -> int:
    ham = _assemble(spec, l, seed, replica, h)
    return int(trace_indicator(ham, e - 0.5 * width, e + 0.5 * width) >= 1)


def aggregate_wegner(hits: list, spec: ModelSpec, width: float,
                     l: int) -> WegnerReport:
    n = len(hits)
    total = int(sum(hits))
    measure = box_measure(spec, l)
    p = total / n
    ci = wilson_interval(total, n)
    denom = width * measure
    return WegnerReport(p, ci, p / denom, (ci[0] / denom, ci[1] / denom),
                        width, measure, n)


def wegner_ratio(spec: ModelSpec, e: float, width: float, l: int,
                 replicas: int, seed: int, h: float | None = None) -> WegnerReport:
    """P(at least one eigenvalue in the interval) over |J| * |box|."""
    hits = [wegner_replica(spec, e, width, l, seed, r, h)
            for r in range(replicas)]
    return aggregate_wegner(hits, spec, width, l)


@dataclass(frozen=True)
class MinamiReport:
    sum_tail: float
    ratio: float
    eps: float
    rho: float
    measure: float
    replicas: int
    count_histogram: tuple


def minami_replica(spec: ModelSpec, e: float, eps: float, l: int,
                   seed: int, replica: int, h: float | None) -> int:
    ham = _assemble(spec, l, seed, replica, h)
    return int(trace_indicator(ham, e - eps, e + eps))


def aggregate_minami(counts: list, spec: ModelSpec, eps: float, l: int,
                     rho: float) -> MinamiReport:
    n = len(counts)
    arr = np.asarray(counts)
    # sum over k >= 2 of P(count >= k) telescopes to E[(count - 1)+]
    sum_tail = float(np.mean(np.maximum(arr - 1, 0)))
    measure = box_measure(spec, l)
    denom = (eps * measure) ** (1.0 + rho) if eps > 0 else float("inf")
    hist = np.bincount(arr, minlength=4)
    return MinamiReport(sum_tail, sum_tail / denom, eps, rho, measure, n,
                        tuple(int(c) for c in hist))


def minami_sum(spec: ModelSpec, e: float, eps: float, l: int, rho: float,
               replicas: int, seed: int, h: float | None = None) -> MinamiReport:
    """Tail sum over k >= 2 of the probability of k eigenvalues in [e +- eps]."""
    if eps < 0:
        raise ValidationError("eps must be >= 0")
    if eps == 0.0:
        return MinamiReport(0.0, 0.0, 0.0, rho, box_measure(spec, l),
                            replicas, (replicas,))
    counts = [minami_replica(spec, e, eps, l, seed, r, h)
              for r in range(replicas)]
    return aggregate_minami(counts, spec, eps, l, rho)


# ---------------------------------------------------------------------------
# joint two-energy experiments


@dataclass(frozen=True)
class JointDecorrelationReport:
    p_joint: float
    p_f: float
    p_g: float
    ci_joint: tuple
    ci_f: tuple
    ci_g: tuple
    defect: float
    replicas: int
    window_halfwidth: float
    indicators_f: np.ndarray
    indicators_g: np.ndarray

    def __post_init__(self):
        for name in ("indicators_f", "indicators_g"):
            a = np.asarray(getattr(self, name), dtype=np.int64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)


def joint_replica(spec: ModelSpec, f: float, g: float, halfwidth: float,
                  l: int, seed: int, replica: int,
                  h: float | None) -> tuple[int, int]:
    """Window-hit indicators at both energies for one disorder sample."""
    ham = _assemble(spec, l, seed, replica, h)
    ind_f = int(trace_indicator(ham, f - halfwidth, f + halfwidth) >= 1)
    ind_g = int(trace_indicator(ham, g - halfwidth, g + halfwidth) >= 1)
    return ind_f, ind_g


def aggregate_joint(indicators: list, halfwidth: float) -> JointDecorrelationReport:
    arr = np.asarray(indicators, dtype=np.int64)
    n = len(arr)
    f_hits = int(arr[:, 0].sum())
    g_hits = int(arr[:, 1].sum())
    j_hits = int(np.sum(arr[:, 0] & arr[:, 1]))
    p_f, p_g, p_j = f_hits / n, g_hits / n, j_hits / n
    return JointDecorrelationReport(
        p_j, p_f, p_g, wilson_interval(j_hits, n), wilson_interval(f_hits, n),
        wilson_interval(g_hits, n), abs(p_j - p_f * p_g), n, halfwidth,
        arr[:, 0].copy(), arr[:, 1].copy())


def joint_decorrelation(spec: ModelSpec, config: ExperimentConfig,
                        g_energy: float | None = None) -> JointDecorrelationReport:
    """Joint probability of eigenvalue hits in 1/L windows at two energies.

    Both events are evaluated on the same disorder sample.  g_energy
    overrides config.G (passing config.F turns the run into the
    identical-event oracle where joint equals marginal).
    """
    f = config.F
    g = config.G if g_energy is None else float(g_energy)
    from .floquet import exceptional_set
    covering = spec.variant == "continuum" and spec.q_per.covering
    exc = exceptional_set(max(f, g) + 1.0, covering=covering)
    for name, e in (("F", f), ("G", g)):
        if exc.contains(e):
            warnings.warn(
                f"reference energy {name}={e} is within tolerance of the "
                f"exceptional energy set; separation may degrade")
    halfwidth = 1.0 / float(config.L)
    inds = [joint_replica(spec, f, g, halfwidth, config.l, config.seed, r,
                          config.h)
            for r in range(config.replicas)]
    return aggregate_joint(inds, halfwidth)


@dataclass(frozen=True)
class JointCountsResult:
    records: list
    correlation: float
    corr_stderr: float
    chi2_stat: float
    chi2_pvalue: float
    chi2_dof: int
    table: np.ndarray


def joint_counts_replica(spec: ModelSpec, ids: IDSTable, e0: float,
                         e0p: float, config: ExperimentConfig,
                         replica: int) -> CountRecord:
    """Simultaneous unfolded interval counts at two energies, one sample."""
    l = config.l
    measure = box_measure(spec, l)
    ham = _assemble(spec, l, config.seed, replica, config.h)
    counts = []
    for e_ref, intervals in ((e0, config.u_plus), (e0p, config.u_minus)):
        n0 = float(ids.N_at(e_ref))
        span = max(abs(a) for ab in intervals for a in ab) if intervals else 0.0
        lo = ids.inverse(n0 - (span + 1.0) / measure)
        hi = ids.inverse(n0 + (span + 1.0) / measure)
        eigs = eigenvalues_in_window(ham, lo, hi)
        sample = unfold(eigs, ids, e_ref, measure, replica, config.nu_min)
        counts.append(tuple(int(np.sum((sample.xi >= a) & (sample.xi < b)))
                            for a, b in intervals))
    return CountRecord(replica, counts[0], counts[1])


def pooled_count_table(records: list, cap: int = 6) -> np.ndarray:
    """Contingency table of total counts at the two energies, tail-pooled."""
    tot_p = np.array([sum(r.counts_plus) for r in records])
    tot_m = np.array([sum(r.counts_minus) for r in records])
    tp = np.minimum(tot_p, cap)
    tm = np.minimum(tot_m, cap)
    table = np.zeros((cap + 1, cap + 1), dtype=np.int64)
    np.add.at(table, (tp, tm), 1)
    return table


def _trim_table(table: np.ndarray) -> np.ndarray:
    keep_r = np.nonzero(table.sum(axis=1) > 0)[0]
    keep_c = np.nonzero(table.sum(axis=0) > 0)[0]
    return table[np.ix_(keep_r, keep_c)]


def aggregate_joint_counts(records: list, cap: int = 6) -> JointCountsResult:
    tot_p = np.array([sum(r.counts_plus) for r in records], dtype=np.float64)
    tot_m = np.array([sum(r.counts_minus) for r in records], dtype=np.float64)
    n = len(records)
    if np.std(tot_p) == 0.0 or np.std(tot_m) == 0.0:
        corr = 0.0
    else:
        corr = float(np.corrcoef(tot_p, tot_m)[0, 1])
    table = pooled_count_table(records, cap)
    trimmed = _trim_table(table)
    if trimmed.shape[0] > 1 and trimmed.shape[1] > 1:
        chi2, p, dof, _ = sps.chi2_contingency(trimmed)
    else:
        chi2, p, dof = 0.0, 1.0, 0
    return JointCountsResult(records, corr, 1.0 / math.sqrt(max(n - 1, 1)),
                             float(chi2), float(p), int(dof), table)


def joint_counts(spec: ModelSpec, e0: float, e0p: float, ids: IDSTable,
                 config: ExperimentConfig) -> JointCountsResult:
    """Joint unfolded count distribution at two energies, one disorder."""
    if e0 == e0p:
        raise ValidationError("the two reference energies must differ")
    records = [joint_counts_replica(spec, ids, e0, e0p, config, r)
               for r in range(config.replicas)]
    return aggregate_joint_counts(records)


# ---------------------------------------------------------------------------
# localization profile


@dataclass(frozen=True)
class LocalizationReport:
    x0: float
    decay: float
    max_log_residual: float
    holds: bool
    xi: float


def localization_profile(pair, xi: float = 0.9,
                         floor: float = 1e-14) -> LocalizationReport:
    """Stretched-exponential envelope fit of an eigenvector profile.

    Fits log|phi| ~ c - s * |x - x0|^xi by least squares over the samples
    above the floor.  The envelope "holds" when the fitted line actually
    decays (by at least two decades across the profile) and no sample
    exceeds it by more than 2 in log (an e^2 slack on the constant).  A
    profile with fewer than 3 usable points (e.g. a delta vector) gets the
    +inf decay sentinel.
    """
    phi = np.abs(np.asarray(pair.vector, dtype=np.float64))
    grid = np.asarray(pair.grid, dtype=np.float64)
    i0 = int(np.argmax(phi))
    x0 = float(grid[i0])
    mask = phi > floor
    if int(mask.sum()) < 3:
        return LocalizationReport(x0, float("inf"), 0.0, True, xi)
    r = np.abs(grid[mask] - x0) ** xi
    y = np.log(phi[mask])
    A = np.stack([np.ones_like(r), -r], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    c, s = float(coef[0]), float(coef[1])
    resid = y - (c - s * r)
    max_pos = float(np.max(resid))
    decays = s * float(np.max(r)) >= math.log(100.0)
    return LocalizationReport(x0, s, max_pos, decays and max_pos <= 2.0, xi)
