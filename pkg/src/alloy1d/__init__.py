"""One-dimensional random alloy operators: assembly, spectra, statistics.

Core types and constructors are re-exported here; the statistical engine
(`spectral_stats`), eigenvalue perturbation tools (`perturbation`), the
periodic/coupling analysis (`floquet`), and the experiment driver (`cli`)
are imported as submodules.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .errors import (Alloy1dError, BasisError, ConditioningError,
                     DegenerateEigenvalueError, MeshError,
                     MultiplierDomainError, RangeError, ReplayError,
                     TrackingError, UnfoldingError, ValidationError,
                     WindowTooLargeError)
from .model import (DiscreteSingleSite, DisorderConfig, DisorderLaw,
                    ModelSpec, PeriodicBackground, SingleSitePotential,
                    evaluate_potential, sample_disorder, unit_bump_model,
                    validate_model)
from .hamiltonian import (BoxHamiltonian, assemble_continuum,
                          assemble_discrete, check_mesh, dump_matrix_csv,
                          load_matrix_csv)
from .eigensolve import (EigenPair, eigenvalue_by_index,
                         eigenvalues_in_window, eigenvector, sturm_count,
                         sturm_count_many, trace_indicator)

__all__ = [
    "BACKEND", "__version__",
    "Alloy1dError", "BasisError", "ConditioningError",
    "DegenerateEigenvalueError", "MeshError", "MultiplierDomainError",
    "RangeError", "ReplayError", "TrackingError", "UnfoldingError",
    "ValidationError", "WindowTooLargeError",
    "DiscreteSingleSite", "DisorderConfig", "DisorderLaw", "ModelSpec",
    "PeriodicBackground", "SingleSitePotential", "evaluate_potential",
    "sample_disorder", "unit_bump_model", "validate_model",
    "BoxHamiltonian", "assemble_continuum", "assemble_discrete",
    "check_mesh", "dump_matrix_csv", "load_matrix_csv",
    "EigenPair", "eigenvalue_by_index", "eigenvalues_in_window",
    "eigenvector", "sturm_count", "sturm_count_many", "trace_indicator",
]
