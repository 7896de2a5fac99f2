"""Exception hierarchy shared across the package.

Every failure that callers are expected to handle programmatically gets its
own class; plain ValueError/TypeError are reserved for outright misuse of an
API (wrong shapes, wrong dtypes).
"""


class Alloy1dError(Exception):
    """Base class for all package-specific failures."""


class ValidationError(Alloy1dError):
    """A model, law, or manifest violates a structural invariant."""


class RangeError(Alloy1dError):
    """A position falls outside the range covered by a sampled configuration."""


class MeshError(Alloy1dError):
    """A requested discretization is too coarse for the target accuracy."""


class WindowTooLargeError(Alloy1dError):
    """An energy window contains more eigenvalues than the configured cap."""


class DegenerateEigenvalueError(Alloy1dError):
    """An eigenvector was requested at a numerically non-simple eigenvalue."""


class TrackingError(Alloy1dError):
    """An eigenvalue could not be followed unambiguously through a parameter move."""


class UnfoldingError(Alloy1dError):
    """The integrated density of states is too flat at the requested energy."""


class BasisError(Alloy1dError):
    """A local solution basis could not be orthonormalized (degenerate weight)."""


class ConditioningError(Alloy1dError):
    """A linear system needed internally is numerically singular."""


class MultiplierDomainError(Alloy1dError):
    """Floquet multipliers fall outside the domain a formula requires."""


class ReplayError(Alloy1dError):
    """A stored run does not match the artifacts it claims to reproduce."""
