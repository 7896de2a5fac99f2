"""End-to-end gates run at production scale.

Every test pins its seeds and tolerances.  The statistical gates are sized
so their Monte Carlo error sits well inside the asserted margins; a failure
means a real regression, not noise.
"""

import math
import os
import time

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from alloy1d.cli import main
from alloy1d.eigensolve import (eigenvalues_in_window, eigenvector,
                                sturm_count)
from alloy1d.floquet import (HillProblem, det_M, det_M_critical_coupling,
                             monodromy)
from alloy1d.hamiltonian import BoxHamiltonian, assemble_continuum, \
    assemble_discrete
from alloy1d.model import sample_disorder
from alloy1d.perturbation import (grad_finite_difference,
                                  grad_hellmann_feynman,
                                  max_jacobian_bound_check)
from alloy1d.spectral_stats import (ExperimentConfig, aggregate_joint_counts,
                                    estimate_ids, exponential_ks,
                                    joint_counts, joint_decorrelation,
                                    level_statistics, minami_sum)


# --- exact numerics ---------------------------------------------------------

def test_windowed_eigensolver_matches_dense_oracle():
    start = time.time()
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(2, 201))
        diag = rng.normal(size=n) * 2.0
        off = rng.normal(size=max(n - 1, 0))
        ham = BoxHamiltonian(diag, off, 1.0, (n - 1) // 2, "discrete",
                             np.arange(n, dtype=np.float64))
        vals = eigh_tridiagonal(ham.diag, ham.offdiag, eigvals_only=True)
        a, b = np.sort(rng.normal(size=2) * 3.0)
        got = eigenvalues_in_window(ham, a, b, tol=1e-12)
        want = vals[(vals >= a) & (vals <= b)]
        assert len(got) == len(want)
        np.testing.assert_allclose(got, want, atol=1e-10, rtol=0)
        for x in rng.normal(size=3) * 3.0:
            assert sturm_count(ham, x) == int(np.sum(vals < x))
    assert time.time() - start < 60.0


def test_gradient_matches_finite_differences_both_variants(spec1,
                                                           discrete_spec):
    start = time.time()
    h = 1.0 / 32
    for r in range(50):
        cfg = sample_disorder(spec1, 4, seed=200, replica=r)
        ham = assemble_continuum(spec1, cfg, 4, h)
        vals = eigenvalues_in_window(ham, 0.2, 1.2)
        assert len(vals) > 0
        pair = eigenvector(ham, float(vals[0]))
        hf = grad_hellmann_feynman(spec1, cfg, pair)
        fd = grad_finite_difference(spec1, cfg, pair.value, delta=1e-6, h=h)
        assert np.sum(np.abs(hf.components - fd.components)) / fd.l1 <= 1e-5
    for r in range(50):
        cfg = sample_disorder(discrete_spec, 8, seed=201, replica=r)
        ham = assemble_discrete(discrete_spec, cfg, 8)
        vals = eigenvalues_in_window(ham, 0.5, 1.5)
        assert len(vals) > 0
        pair = eigenvector(ham, float(vals[0]))
        hf = grad_hellmann_feynman(discrete_spec, cfg, pair)
        fd = grad_finite_difference(discrete_spec, cfg, pair.value,
                                    delta=1e-6)
        assert np.sum(np.abs(hf.components - fd.components)) / fd.l1 <= 1e-5
    assert time.time() - start < 300.0


def test_pairwise_bound_holds_on_random_simplex_pairs():
    start = time.time()
    rng = np.random.default_rng(33)
    violations = 0
    for _ in range(100_000):
        n = int(rng.integers(2, 51))
        u = rng.random(n)
        u /= u.sum()
        v = rng.random(n)
        v /= v.sum()
        if not max_jacobian_bound_check(u, v).holds:
            violations += 1
    assert violations == 0
    assert time.time() - start < 60.0


def test_constant_coefficient_discriminant_oracle():
    start = time.time()
    problem = HillProblem(np.array([2.0]), np.array([1.0]))
    for lam in np.linspace(-10.0, 10.0, 100):
        data = monodromy(problem, lam=float(lam))
        c = 2.0 - lam
        want = (2.0 * math.cos(math.sqrt(c)) if c >= 0
                else 2.0 * math.cosh(math.sqrt(-c)))
        assert abs(data.D - want) <= 1e-8
        assert abs(np.linalg.det(data.T) - 1.0) <= 1e-10
        assert abs(data.mu_plus * data.mu_minus - 1.0) <= 1e-9
    assert time.time() - start < 10.0


def test_interaction_determinant_positive_below_critical_coupling():
    rep = det_M(2.0, math.sqrt(2.0), 0.0)
    assert rep.value == pytest.approx(441.0 / 64.0, abs=1e-12)
    rng = np.random.default_rng(99)
    for _ in range(10_000):
        lam_G = 1.0 + float(rng.uniform(0.01, 2.0))
        lam_F = lam_G + float(rng.uniform(0.01, 2.0))
        pmax = min(1.0, det_M_critical_coupling(lam_F, lam_G)) * 0.999
        p = float(rng.uniform(-pmax, pmax))
        rep = det_M(lam_F, lam_G, p)
        assert rep.positive and rep.value > 0.0


# --- statistics at scale ----------------------------------------------------

def test_unfolded_gaps_are_exponential_and_counts_match(spec1):
    grid = np.linspace(0.0, 3.0, 601)
    ids = estimate_ids(spec1, 400, 192, grid, seed=401, h=0.05)
    assert float(ids.nu_at(0.3)) > 1e-3  # reference energy sits in the bulk
    cfg = ExperimentConfig(l=400, replicas=1000, seed=402, h=0.05, w=10.0,
                           u_plus=((-5.0, 0.0), (0.0, 5.0)))
    res = level_statistics(spec1, 0.3, ids, cfg)
    ks, _ = exponential_ks(res.gaps)
    assert ks <= 0.05
    for mean, (a, b) in zip(res.mean_counts, res.intervals):
        width = b - a
        assert abs(mean - width) <= 0.1 * width


def test_distant_energies_give_independent_counts(spec1):
    grid = np.linspace(0.0, 3.0, 601)
    ids = estimate_ids(spec1, 100, 192, grid, seed=501, h=0.05)
    rejections = 0
    records = []
    for exp in range(20):
        cfg = ExperimentConfig(l=100, replicas=300, seed=1000 + exp, h=0.05,
                               u_plus=((-3.0, 3.0),), u_minus=((-3.0, 3.0),),
                               F=0.3, G=0.8)
        res = joint_counts(spec1, 0.3, 0.8, ids, cfg)
        records.extend(res.records)
        if res.chi2_pvalue <= 0.01:
            rejections += 1
    assert rejections <= 1  # >= 95% of the experiments accept independence
    pooled = aggregate_joint_counts(records)
    assert abs(pooled.correlation) <= 3.0 * pooled.corr_stderr


def test_joint_hit_probability_decays_like_inverse_square(spec1):
    xs, ys = [], []
    for L in (200, 400, 800):
        l = int(round(L ** 0.7))
        cfg = ExperimentConfig(l=l, replicas=2000, seed=600 + L, L=L,
                               alpha=0.7, k=0.8, F=0.3, G=0.8, h=0.05)
        rep = joint_decorrelation(spec1, cfg)
        assert rep.p_joint > 0.0
        xs.append(math.log(L))
        ys.append(math.log(rep.p_joint / l**2))
    slope = float(np.polyfit(xs, ys, 1)[0])
    assert slope <= -0.85


def test_double_hit_ratio_stable_across_scales(spec1):
    ratios = []
    for l in (50, 100, 200):
        rep = minami_sum(spec1, 0.3, l ** -1.2, l, 0.5, 2000, seed=700,
                        h=0.05)
        assert rep.sum_tail > 0.0
        ratios.append(rep.ratio)
    assert max(ratios) / min(ratios) < 5.0


# --- reproducibility --------------------------------------------------------

def test_cli_output_deterministic_across_workers(tmp_path):
    args = ["minami", "--box", "100", "--replicas", "64", "--seed", "42"]
    outs = [str(tmp_path / name) for name in ("serial", "pool", "again")]
    assert main(args + ["--out", outs[0], "--workers", "1"]) == 0
    assert main(args + ["--out", outs[1], "--workers", "8"]) == 0
    assert main(args + ["--out", outs[2], "--workers", "1"]) == 0
    names = sorted(os.listdir(outs[0]))
    assert names == sorted(os.listdir(outs[1])) == sorted(os.listdir(outs[2]))
    for name in names:
        blobs = []
        for out in outs:
            with open(os.path.join(out, name), "rb") as fh:
                blobs.append(fh.read())
        assert blobs[0] == blobs[1] == blobs[2], name
