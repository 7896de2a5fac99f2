import numpy as np
import pytest

from alloy1d.errors import MeshError, ValidationError
from alloy1d.hamiltonian import (assemble_continuum, assemble_discrete,
                                 check_mesh, dump_matrix_csv,
                                 free_box_eigenvalue,
                                 free_box_eigenvalue_discretized,
                                 load_matrix_csv, max_mesh_for)
from alloy1d.model import (DisorderLaw, ModelSpec, SingleSitePotential,
                           sample_disorder)


def _zero_potential_spec():
    # zero-coupling law freezes the disorder at 0: the free Laplacian
    q = SingleSitePotential(np.array([-0.25, 0.25]), np.array([1.0, 1.0]),
                            halfwidth=1, positivity=(-0.25, 0.25))
    return ModelSpec("continuum", DisorderLaw("uniform", 0.0, 0.0), q=q)


def test_continuum_dimensions(spec1):
    cfg = sample_disorder(spec1, 4, seed=0, replica=0)
    ham = assemble_continuum(spec1, cfg, 4, h=0.125)
    assert ham.dim == int(2 * 4 / 0.125) - 1
    assert ham.grid[0] == pytest.approx(-4 + 0.125)
    assert ham.grid[-1] == pytest.approx(4 - 0.125)
    np.testing.assert_allclose(ham.offdiag, -1.0 / 0.125**2)


def test_free_box_eigenvalues_match_closed_form():
    spec = _zero_potential_spec()
    cfg = sample_disorder(spec, 3, seed=0, replica=0)
    h = 1.0 / 16
    ham = assemble_continuum(spec, cfg, 3, h=h)
    vals = np.linalg.eigvalsh(ham.to_dense())
    for k in (1, 2, 3, 10):
        # exact for the discretized operator; bias below E^2 h^2 / 12
        want = free_box_eigenvalue_discretized(k, 3, h)
        cont = free_box_eigenvalue(k, 3)
        assert vals[k - 1] == pytest.approx(want, abs=1e-9)
        assert abs(want - cont) < 1.01 * cont**2 * h**2 / 12.0


def test_discrete_assembly(discrete_spec):
    cfg = sample_disorder(discrete_spec, 5, seed=1, replica=0)
    ham = assemble_discrete(discrete_spec, cfg, 5)
    assert ham.dim == 11
    assert ham.h == 1.0
    np.testing.assert_allclose(ham.offdiag, -1.0)
    np.testing.assert_allclose(
        ham.diag, 2.0 + np.asarray(cfg.omega_at(np.arange(-5, 6))))


def test_mesh_must_divide_box(spec1):
    cfg = sample_disorder(spec1, 2, seed=0, replica=0)
    with pytest.raises(ValidationError):
        assemble_continuum(spec1, cfg, 2, h=0.3)


def test_check_mesh_gate():
    check_mesh(0.05, 3.0, 1.0, window_scale=1.0)
    with pytest.raises(MeshError):
        check_mesh(0.5, 3.0, 1.0, window_scale=100.0)
    h_max = max_mesh_for(3.0, 1.0, 100.0)
    check_mesh(h_max * 0.999, 3.0, 1.0, window_scale=100.0)
    with pytest.raises(MeshError):
        check_mesh(h_max * 1.001, 3.0, 1.0, window_scale=100.0)


def test_gershgorin_bracket(spec1):
    cfg = sample_disorder(spec1, 4, seed=2, replica=1)
    ham = assemble_continuum(spec1, cfg, 4, h=0.25)
    lo, hi = ham.spectrum_bracket()
    vals = np.linalg.eigvalsh(ham.to_dense())
    assert lo <= vals[0] and vals[-1] <= hi


def test_shifted(spec1):
    cfg = sample_disorder(spec1, 2, seed=0, replica=0)
    ham = assemble_continuum(spec1, cfg, 2, h=0.25)
    np.testing.assert_allclose(ham.shifted(3.5).diag, ham.diag + 3.5)


def test_matrix_csv_roundtrip(tmp_path, spec1):
    cfg = sample_disorder(spec1, 2, seed=4, replica=0)
    ham = assemble_continuum(spec1, cfg, 2, h=0.25)
    path = str(tmp_path / "m.csv")
    dump_matrix_csv(ham, path)
    diag, off = load_matrix_csv(path)
    np.testing.assert_array_equal(diag, ham.diag)
    np.testing.assert_array_equal(off, ham.offdiag)
    with open(path) as fh:
        assert fh.readline().startswith("#schema=alloy1d.matrix")
