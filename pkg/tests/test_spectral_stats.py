import math

import numpy as np
import pytest
import scipy.stats as sps

from alloy1d.eigensolve import EigenPair
from alloy1d.errors import (MeshError, UnfoldingError, ValidationError)
from alloy1d.model import (DiscreteSingleSite, DisorderLaw, ModelSpec)
from alloy1d.spectral_stats import (CountRecord, ExperimentConfig, IDSTable,
                                    aggregate_joint, aggregate_joint_counts,
                                    aggregate_minami, aggregate_wegner,
                                    box_measure, estimate_ids, exponential_ks,
                                    forward_gaps, joint_counts,
                                    joint_decorrelation, levelstats_replica,
                                    localization_profile, minami_sum,
                                    poisson_points, pooled_count_table,
                                    unfold, wegner_ratio, wilson_interval)


def _frozen_lattice():
    return ModelSpec("discrete", DisorderLaw("uniform", 0.0, 0.0),
                     a=DiscreteSingleSite(np.array([1.0])))


def _linear_table(box=50):
    # exact synthetic IDS: N(E) = E/2 on [0, 3], constant density 1/2
    grid = np.linspace(0.0, 3.0, 31)
    return IDSTable(grid, grid / 2.0, np.full(31, 0.5), box, 1)


def test_box_measure(spec1, discrete_spec):
    assert box_measure(spec1, 50) == 100.0
    assert box_measure(discrete_spec, 50) == 101.0


def test_wilson_interval():
    lo, hi = wilson_interval(5, 10)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == 1.0
    with pytest.raises(ValidationError):
        wilson_interval(0, 0)


def test_free_lattice_ids_oracle():
    # zero disorder: N(E) -> arccos((2 - E)/2) / pi as the box grows
    spec = _frozen_lattice()
    grid = np.linspace(0.2, 3.8, 19)
    table = estimate_ids(spec, 80, 2, grid, seed=0)
    want = np.arccos((2.0 - grid) / 2.0) / np.pi
    np.testing.assert_allclose(table.N, want, atol=0.02)
    assert table.lipschitz_constant() > 0.0


def test_ids_table_invariants(ids_small):
    assert np.all(np.diff(ids_small.N) >= 0)
    assert np.all(ids_small.nu >= 0.0)
    # inverse is a right-inverse of N_at away from flat cells
    for n_val in (0.05, 0.2, 0.4):
        e = ids_small.inverse(n_val)
        assert ids_small.N_at(e) == pytest.approx(n_val, abs=1e-9)
    assert ids_small.inverse(-1.0) == ids_small.energy[0]
    assert ids_small.inverse(99.0) == ids_small.energy[-1]


def test_ids_below_spectrum_is_zero(ids_small):
    # the spectrum of the box operator is strictly positive here
    assert ids_small.N[0] == 0.0


def test_estimate_ids_gates(spec1):
    grid = np.linspace(0.0, 3.0, 11)
    with pytest.raises(ValidationError):
        estimate_ids(spec1, 10, 2, grid, seed=0, h=0.05)  # box too small
    with pytest.raises(MeshError):
        estimate_ids(spec1, 60, 2, grid, seed=0, h=0.5)  # coarse mesh
    with pytest.raises(ValidationError):
        estimate_ids(spec1, 60, 2, grid[::-1], seed=0, h=0.05)
    with pytest.raises(ValidationError):
        estimate_ids(spec1, 60, 2, grid, seed=0, h=None)


def test_estimate_ids_law_override():
    spec = _frozen_lattice()
    grid = np.linspace(0.2, 3.8, 10)
    frozen = estimate_ids(spec, 60, 2, grid, seed=0)
    shifted = estimate_ids(spec, 60, 2, grid, seed=0,
                           law=DisorderLaw("uniform", 1.0, 1.0))
    # constant +1 potential shifts the counting function down in energy
    assert np.all(shifted.N <= frozen.N + 1e-12)
    assert shifted.N[0] < frozen.N[0] + 1e-12


def test_unfold_linear_oracle():
    table = _linear_table()
    eigs = np.array([1.4, 1.5, 1.62])
    sample = unfold(eigs, table, 1.5, measure=100.0)
    np.testing.assert_allclose(sample.xi, [-5.0, 0.0, 6.0], atol=1e-12)


def test_unfold_refuses_dead_density():
    grid = np.linspace(0.0, 3.0, 31)
    table = IDSTable(grid, np.zeros(31), np.zeros(31), 50, 1)
    with pytest.raises(UnfoldingError):
        unfold(np.array([1.5]), table, 1.5, measure=100.0)


def test_unfold_refuses_collisions():
    grid = np.array([0.0, 1.0, 2.0, 3.0])
    table = IDSTable(grid, np.array([0.0, 0.5, 0.5, 1.0]),
                     np.full(4, 0.4), 50, 1)
    # two eigenvalues inside the flat cell map to one unfolded point
    with pytest.raises(UnfoldingError):
        unfold(np.array([1.2, 1.8]), table, 0.5, measure=100.0)


def test_forward_gaps():
    xi = np.array([-3.0, -1.0, 0.5, 2.0])
    np.testing.assert_allclose(forward_gaps(xi, -5.0, 0.0), [2.0, 1.5])
    # the last point has no successor: censored away
    np.testing.assert_allclose(forward_gaps(xi, -5.0, 5.0), [2.0, 1.5, 1.5])
    assert len(forward_gaps(xi, 3.0, 5.0)) == 0


def test_poisson_points_calibration():
    rng = np.random.default_rng(5)
    pts = poisson_points(0.0, 4000.0, rng)
    assert np.all((pts >= 0.0) & (pts < 4000.0))
    assert len(pts) == pytest.approx(4000, abs=4 * math.sqrt(4000))
    ks, p = exponential_ks(np.diff(pts))
    assert p > 0.01


def test_exponential_ks_calibrated():
    rng = np.random.default_rng(11)
    ks, p = exponential_ks(rng.exponential(size=4000))
    assert ks < 0.03
    with pytest.raises(ValidationError):
        exponential_ks(np.empty(0))


def test_experiment_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(l=50, replicas=1, seed=0, k=1.5)
    with pytest.raises(ValidationError):
        ExperimentConfig(l=50, replicas=1, seed=0, L=400, alpha=0.7, k=0.9)
    with pytest.raises(ValidationError):
        ExperimentConfig(l=50, replicas=1, seed=0, F=0.5, G=0.5)
    cfg = ExperimentConfig(l=66, replicas=1, seed=0, L=400, alpha=0.7, k=0.8)
    assert cfg.L == 400
    assert ExperimentConfig(l=50, replicas=1, seed=0).L == 50


def test_count_record_validation():
    with pytest.raises(ValidationError):
        CountRecord(0, (1, -2))
    rec = CountRecord(0, (1, 2), (0, 3), 1, 0)
    assert rec.counts_plus == (1, 2)


def test_levelstats_replica_smoke(spec1, ids_small):
    cfg = ExperimentConfig(l=60, replicas=1, seed=3, h=0.05, w=6.0)
    record, sample, gaps = levelstats_replica(spec1, ids_small, 0.5, cfg, 0)
    assert record.replica == 0
    assert all(c >= 0 for c in record.counts_plus)
    assert np.all(np.diff(sample.xi) > 0)
    assert np.all(gaps > 0)
    # every reported gap starts in the lower half-window
    lower = sample.xi[(sample.xi >= -cfg.w) & (sample.xi <= 0.0)]
    assert len(gaps) in (len(lower), len(lower) - 1)


def test_wegner_hand_aggregation(spec1):
    rep = aggregate_wegner([1, 0, 1, 0], spec1, width=0.1, l=50)
    assert rep.probability == 0.5
    assert rep.ratio == pytest.approx(0.5 / (0.1 * 100.0))
    assert rep.ci[0] < 0.5 < rep.ci[1]
    assert rep.replicas == 4


def test_wegner_frozen_lattice_certainty():
    # zero disorder: the whole band sits in [0, 4], so a hit is certain
    spec = _frozen_lattice()
    rep = wegner_ratio(spec, 2.0, width=4.2, l=50, replicas=3, seed=0)
    assert rep.probability == 1.0


def test_minami_hand_aggregation(spec1):
    rep = aggregate_minami([0, 1, 2, 3], spec1, eps=0.01, l=50, rho=0.5)
    # sum over k>=2 of P(count >= k) telescopes to E[(count-1)+]
    assert rep.sum_tail == pytest.approx(0.75)
    assert rep.ratio == pytest.approx(0.75 / (0.01 * 100.0) ** 1.5)
    assert rep.count_histogram == (1, 1, 1, 1)


def test_minami_zero_width(spec1):
    rep = minami_sum(spec1, 0.3, eps=0.0, l=50, rho=0.5, replicas=7, seed=0)
    assert rep.sum_tail == 0.0 and rep.ratio == 0.0
    with pytest.raises(ValidationError):
        minami_sum(spec1, 0.3, eps=-0.1, l=50, rho=0.5, replicas=1, seed=0)


def test_aggregate_joint_hand_case():
    rep = aggregate_joint([(1, 1), (1, 0), (0, 0), (0, 1)], halfwidth=0.01)
    assert rep.p_f == 0.5 and rep.p_g == 0.5 and rep.p_joint == 0.25
    assert rep.defect == pytest.approx(0.0)
    assert rep.replicas == 4
    np.testing.assert_array_equal(rep.indicators_f, [1, 1, 0, 0])


def test_joint_identical_event_oracle(spec1):
    cfg = ExperimentConfig(l=50, replicas=8, seed=9, h=0.05, F=0.7, G=1.2)
    rep = joint_decorrelation(spec1, cfg, g_energy=cfg.F)
    # same window at both slots: joint and marginals coincide exactly
    assert rep.p_joint == rep.p_f == rep.p_g
    assert rep.defect == pytest.approx(rep.p_f - rep.p_f**2)


def test_joint_warns_near_exceptional(spec1):
    cfg = ExperimentConfig(l=50, replicas=1, seed=0, h=0.05,
                           F=math.pi**2, G=1.2)
    with pytest.warns(UserWarning):
        joint_decorrelation(spec1, cfg)


def test_pooled_count_table():
    records = [CountRecord(0, (1, 1), (0,)), CountRecord(1, (9, 3), (2,)),
               CountRecord(2, (0,), (0,))]
    table = pooled_count_table(records, cap=6)
    assert table.shape == (7, 7)
    assert table[2, 0] == 1  # totals (2, 0)
    assert table[6, 2] == 1  # totals (12, 2) pooled into the cap
    assert table[0, 0] == 1
    assert table.sum() == 3


def test_aggregate_joint_counts_degenerate():
    records = [CountRecord(r, (1,), (1,)) for r in range(5)]
    agg = aggregate_joint_counts(records)
    assert agg.correlation == 0.0
    assert agg.chi2_pvalue == 1.0 and agg.chi2_dof == 0


def test_joint_counts_rejects_equal_energies(spec1, ids_small):
    cfg = ExperimentConfig(l=60, replicas=1, seed=0, h=0.05)
    with pytest.raises(ValidationError):
        joint_counts(spec1, 0.5, 0.5, ids_small, cfg)


def test_joint_counts_smoke(spec1, ids_small):
    cfg = ExperimentConfig(l=60, replicas=6, seed=15, h=0.05,
                           u_plus=((-2.0, 2.0),), u_minus=((-2.0, 2.0),))
    res = joint_counts(spec1, 0.5, 1.1, ids_small, cfg)
    assert len(res.records) == 6
    assert res.table.sum() == 6
    assert -1.0 <= res.correlation <= 1.0


def _pair(grid, vec):
    return EigenPair(0.5, vec, 0.0, grid, 1.0)


def test_localization_profile_stretched_exponential():
    grid = np.arange(-40.0, 40.5, 0.5)
    phi = np.exp(-2.0 * np.abs(grid - 3.0) ** 0.9)
    rep = localization_profile(_pair(grid, phi), xi=0.9)
    assert rep.holds
    assert rep.x0 == 3.0
    assert rep.decay == pytest.approx(2.0, abs=1e-9)
    assert rep.max_log_residual < 1e-9


def test_localization_profile_flat_vector_fails():
    grid = np.arange(-40.0, 40.5, 0.5)
    rep = localization_profile(_pair(grid, np.full(len(grid), 0.1)))
    assert not rep.holds


def test_localization_profile_delta_sentinel():
    grid = np.arange(-5.0, 5.5, 0.5)
    phi = np.zeros(len(grid))
    phi[10] = 1.0
    rep = localization_profile(_pair(grid, phi))
    assert rep.holds and rep.decay == np.inf
