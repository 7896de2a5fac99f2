"""Assembly of the boxed operator as a symmetric tridiagonal matrix.

Both model variants restrict to the box [-L, L] with Dirichlet boundary
conditions.  The continuum operator is discretized with the 3-point
second-order stencil on a uniform grid; in one dimension this keeps the
matrix tridiagonal, so eigenvalue counts can be taken exactly by Sturm
sequences instead of approximately by a dense solver.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import MeshError, ValidationError
from .model import DisorderConfig, ModelSpec, evaluate_potential

# Discretization error budget: keep the 3-point stencil's O(h^2) eigenvalue
# bias below a tenth of the finest energy window the experiment resolves.
_MESH_BUDGET = 0.1


@dataclass(frozen=True)
class BoxHamiltonian:
    """Symmetric tridiagonal restriction of the operator to [-L, L].

    Acts on interior grid points only (boundary values implicitly zero).
    h == 1.0 together with variant "discrete" marks the lattice model,
    where grid holds the integer site indices -L..L.
    """

    diag: np.ndarray
    offdiag: np.ndarray
    h: float
    box_halfwidth: int
    variant: str
    grid: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=np.float64)
        o = np.asarray(self.offdiag, dtype=np.float64)
        g = np.asarray(self.grid, dtype=np.float64)
        for a in (d, o, g):
            a.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", o)
        object.__setattr__(self, "grid", g)
        if len(o) != len(d) - 1:
            raise ValidationError("offdiag must be one entry shorter than diag")
        if len(g) != len(d):
            raise ValidationError("grid must align with diag")
        if self.h <= 0:
            raise ValidationError("mesh must be positive")

    @property
    def dim(self) -> int:
        return len(self.diag)

    def to_dense(self) -> np.ndarray:
        a = np.diag(self.diag)
        if self.dim > 1:
            a += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return a

    def norm_bound(self) -> float:
        """Gershgorin upper bound on the spectral radius."""
        radius = np.zeros(self.dim)
        if self.dim > 1:
            radius[:-1] += np.abs(self.offdiag)
            radius[1:] += np.abs(self.offdiag)
        return float(np.max(np.abs(self.diag) + radius))

    def spectrum_bracket(self) -> tuple[float, float]:
        """Gershgorin interval certain to contain every eigenvalue."""
        radius = np.zeros(self.dim)
        if self.dim > 1:
            radius[:-1] += np.abs(self.offdiag)
            radius[1:] += np.abs(self.offdiag)
        return (float(np.min(self.diag - radius)),
                float(np.max(self.diag + radius)))

    def shifted(self, c: float) -> "BoxHamiltonian":
        """H + c*I on the same grid."""
        return BoxHamiltonian(self.diag + c, self.offdiag, self.h,
                              self.box_halfwidth, self.variant, self.grid)


def assemble_discrete(spec: ModelSpec, config: DisorderConfig,
                      box_halfwidth: int) -> BoxHamiltonian:
    """Lattice operator on sites -L..L: periodic Jacobi part plus V(m)."""
    if spec.variant != "discrete":
        raise ValidationError("assemble_discrete needs a discrete model")
    L = int(box_halfwidth)
    if L < 0:
        raise ValidationError(f"box_halfwidth must be >= 0, got {L}")
    sites = np.arange(-L, L + 1, dtype=np.int64)
    pd = len(spec.jacobi_diag)
    po = len(spec.jacobi_offdiag)
    diag = spec.jacobi_diag[np.mod(sites, pd)] + evaluate_potential(
        spec, config, sites.astype(np.float64))
    offdiag = spec.jacobi_offdiag[np.mod(sites[:-1], po)]
    return BoxHamiltonian(diag, np.asarray(offdiag, dtype=np.float64),
                          1.0, L, "discrete", sites.astype(np.float64))


def assemble_continuum(spec: ModelSpec, config: DisorderConfig,
                       box_halfwidth: int, h: float) -> BoxHamiltonian:
    """3-point discretization on the interior grid of [-L, L].

    Requires 2L/h to be an integer >= 4 so the grid lands exactly on the
    box endpoints; with 1/h an integer the integer lattice points are grid
    points, which the cell decomposition downstream relies on.
    """
    if spec.variant != "continuum":
        raise ValidationError("assemble_continuum needs a continuum model")
    L = int(box_halfwidth)
    if L < 1:
        raise ValidationError(f"box_halfwidth must be >= 1, got {L}")
    nsteps_f = 2 * L / h
    nsteps = int(round(nsteps_f))
    if abs(nsteps_f - nsteps) > 1e-9 * max(1.0, nsteps_f) or nsteps < 4:
        raise ValidationError(
            f"2L/h = {nsteps_f} must be an integer >= 4 (L={L}, h={h})")
    x = -L + h * np.arange(1, nsteps)
    inv_h2 = 1.0 / (h * h)
    diag = 2.0 * inv_h2 + evaluate_potential(spec, config, x)
    offdiag = np.full(nsteps - 2, -inv_h2)
    return BoxHamiltonian(diag, offdiag, float(h), L, "continuum", x)


def check_mesh(h: float, energy: float, sup_v: float,
               window_scale: float) -> None:
    """Gate h against the O(h^2) eigenvalue bias near a target energy.

    window_scale is the scale parameter of the finest window resolved
    (window width ~ 2/window_scale); the stencil bias h^2 (|E| + sup V)^2 / 12
    must stay below a tenth of that width's half, or the windowed counts
    would mix discretization error into the statistics.
    """
    if h <= 0 or window_scale <= 0:
        raise ValidationError("mesh and window scale must be positive")
    bias = h * h * (abs(energy) + sup_v) ** 2 / 12.0
    allowed = _MESH_BUDGET / window_scale
    if bias > allowed:
        raise MeshError(
            f"mesh h={h} gives eigenvalue bias ~{bias:.3g} near E={energy}, "
            f"above the {allowed:.3g} budget for window scale {window_scale}; "
            f"refine h below {np.sqrt(allowed * 12.0) / (abs(energy) + sup_v):.4g}")


def max_mesh_for(energy: float, sup_v: float, window_scale: float) -> float:
    """Largest h passing check_mesh for the given window."""
    if window_scale <= 0:
        raise ValidationError("window scale must be positive")
    denom = abs(energy) + sup_v
    if denom == 0.0:
        return float("inf")
    return float(np.sqrt(_MESH_BUDGET * 12.0 / window_scale) / denom)


def dump_matrix_csv(ham: BoxHamiltonian, path: str) -> None:
    """Three-column dump (index, diag, offdiag); offdiag[i] couples i, i+1."""
    with open(path, "w", newline="") as fh:
        fh.write("#schema=alloy1d.matrix.v1\n")
        writer = csv.writer(fh)
        writer.writerow(["index", "diag", "offdiag"])
        for i in range(ham.dim):
            off = repr(float(ham.offdiag[i])) if i < ham.dim - 1 else ""
            writer.writerow([i, repr(float(ham.diag[i])), off])


def load_matrix_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read back (diag, offdiag) from dump_matrix_csv output."""
    diag: list[float] = []
    off: list[float] = []
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#schema=alloy1d.matrix"):
            raise ValidationError(f"not a matrix dump: {path}")
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["index", "diag", "offdiag"]:
            raise ValidationError(f"unexpected matrix dump header {header}")
        for row in reader:
            diag.append(float(row[1]))
            if row[2]:
                off.append(float(row[2]))
    return np.asarray(diag), np.asarray(off)


def free_box_eigenvalue(k: int, box_halfwidth: int) -> float:
    """k-th Dirichlet eigenvalue (kπ/2L)^2 of the free box, k >= 1."""
    return (k * np.pi / (2.0 * box_halfwidth)) ** 2


def free_box_eigenvalue_discretized(k: int, box_halfwidth: int,
                                    h: float) -> float:
    """Exact k-th eigenvalue of the discretized free box (tridiagonal Toeplitz)."""
    return float(2.0 / (h * h) * (1.0 - np.cos(k * np.pi * h
                                               / (2.0 * box_halfwidth))))
