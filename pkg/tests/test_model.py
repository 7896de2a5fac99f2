import numpy as np
import pytest

from alloy1d.errors import RangeError, ValidationError
from alloy1d.model import (DiscreteSingleSite, DisorderLaw, ModelSpec,
                           PeriodicBackground, SingleSitePotential,
                           evaluate_potential, sample_disorder,
                           unit_bump_model, validate_model)


def test_unit_bump_model_validates(spec1):
    report = validate_model(spec1)
    assert report.ok
    assert report.constants["support_bound_M"] == 1.0
    assert report.constants["covering"] is False


def test_unit_bump_potential_values(spec1):
    cfg = sample_disorder(spec1, 2, seed=5, replica=0)
    # at x = 0 only the n = 0 bump is active and q(0) = 1
    assert evaluate_potential(spec1, cfg, 0.0) == pytest.approx(
        float(cfg.omega_at(0)))
    # midpoint between bumps is outside every support
    assert evaluate_potential(spec1, cfg, 0.5) == 0.0
    with pytest.raises(RangeError):
        evaluate_potential(spec1, cfg, 100.0)


def test_sample_disorder_box_consistency(spec1):
    small = sample_disorder(spec1, 3, seed=9, replica=4)
    big = sample_disorder(spec1, 10, seed=9, replica=4)
    for n in small.sites:
        assert big.omega_at(int(n)) == small.omega_at(int(n))


def test_sample_disorder_covers_margin(spec1):
    cfg = sample_disorder(spec1, 5, seed=0, replica=0)
    assert cfg.sites[0] == -(5 + spec1.margin)
    assert cfg.sites[-1] == 5 + spec1.margin


def test_omega_at_outside_range_is_zero(spec1):
    cfg = sample_disorder(spec1, 2, seed=0, replica=0)
    assert cfg.omega_at(1000) == 0.0


def test_law_support_and_cdf():
    law = DisorderLaw("uniform", -0.5, 1.5)
    assert law.support_bound == 1.5
    np.testing.assert_allclose(law.cdf([-1.0, -0.5, 0.5, 1.5, 2.0]),
                               [0.0, 0.0, 0.5, 1.0, 1.0])


def test_table_law_sampling_matches_cdf():
    # triangular density on [0, 2]
    law = DisorderLaw("table", breakpoints=np.array([0.0, 2.0]),
                      density=np.array([1.0, 0.0]))
    u = np.linspace(0.005, 0.995, 199)
    x = law.from_uniform(u)
    np.testing.assert_allclose(law.cdf(x), u, atol=1e-12)
    assert np.all(np.diff(x) > 0)


def test_table_law_must_normalize():
    with pytest.raises(ValidationError):
        DisorderLaw("table", breakpoints=np.array([0.0, 1.0]),
                    density=np.array([1.0, 0.5]))


def test_negative_profile_fails_validation():
    q = SingleSitePotential(np.array([-0.25, 0.25]), np.array([-1.0, 1.0]),
                            halfwidth=1, positivity=(-0.25, 0.25))
    spec = ModelSpec("continuum", DisorderLaw("uniform", 0.0, 1.0), q=q)
    report = validate_model(spec)
    assert not report.ok
    failed = [name for name, ok, _ in report.checks if not ok]
    assert "q nonnegative" in failed


def test_discrete_spec_roundtrip(discrete_spec):
    doc = discrete_spec.to_json_dict()
    back = ModelSpec.from_json_dict(doc)
    assert back.variant == "discrete"
    np.testing.assert_array_equal(back.a.a, discrete_spec.a.a)
    np.testing.assert_array_equal(back.jacobi_diag, discrete_spec.jacobi_diag)


def test_continuum_spec_roundtrip(spec1):
    back = ModelSpec.from_json(spec1.to_json())
    assert back.variant == "continuum"
    assert back.q.halfwidth == spec1.q.halfwidth
    np.testing.assert_array_equal(back.q.values, spec1.q.values)
    assert back.q_per.is_zero


def test_from_json_rejects_garbage():
    with pytest.raises(ValidationError):
        ModelSpec.from_json_dict({"variant": "continuum"})


def test_covering_flag_derived():
    # widen the positivity interval to length 1: translates cover the line
    q = SingleSitePotential(np.array([-0.5, 0.5]), np.array([1.0, 1.0]),
                            halfwidth=1, positivity=(-0.5, 0.5))
    spec = ModelSpec("continuum", DisorderLaw("uniform", 0.0, 1.0), q=q)
    assert spec.q_per.covering
    assert validate_model(spec).ok


def test_background_callable_periodic():
    bg = PeriodicBackground(np.array([0.0, 1.0, 0.0, -1.0]))
    np.testing.assert_allclose(bg(np.array([0.25, 1.25, -0.75])),
                               [1.0, 1.0, 1.0])


def test_discrete_potential_is_lattice_convolution(discrete_spec):
    cfg = sample_disorder(discrete_spec, 4, seed=1, replica=0)
    m = np.arange(-4, 5).astype(np.float64)
    np.testing.assert_allclose(evaluate_potential(discrete_spec, cfg, m),
                               np.asarray(cfg.omega_at(np.arange(-4, 5))))
    with pytest.raises(RangeError):
        evaluate_potential(discrete_spec, cfg, 0.5)


def test_potential_sup_bound_is_a_bound(spec1):
    bound = spec1.potential_sup_bound()
    cfg = sample_disorder(spec1, 8, seed=3, replica=2)
    x = np.linspace(-8, 8, 4001)
    assert np.max(np.abs(evaluate_potential(spec1, cfg, x))) <= bound + 1e-12
