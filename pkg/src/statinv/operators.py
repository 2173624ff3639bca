"""Discrete compact operators on L2[0, 1] in the indicator basis.

Operators are represented by their Galerkin matrix M_ij = <T phi_j, phi_i>
on an equidistant grid; the singular value decomposition is computed once at
construction and cached.  All operators here map L2[0, 1] to itself and are
Hilbert-Schmidt by construction (finite matrices), mirroring the compact
operators whose regularization the rest of the package studies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grid import Grid, L2Vector

__all__ = [
    "TOL_SVD",
    "DiscreteOperator",
    "SourceCondition",
    "build_integration_operator",
    "build_holder_kernel_operator",
    "apply",
    "generalized_inverse_apply",
    "discretization_defect",
    "save_operator",
    "load_operator",
]

# Relative threshold below which singular values are treated as zero.
TOL_SVD = 1e-10


class DiscreteOperator:
    """An n x n Galerkin matrix together with its cached singular system.

    Attributes
    ----------
    grid : Grid
    matrix : ndarray, shape (n, n)
        Action of the operator in the indicator basis.
    u, s, vt : ndarray
        Cached SVD, ``matrix = u @ diag(s) @ vt`` with ``s`` nonincreasing.
    hs_norm : float
        Hilbert-Schmidt norm, sqrt(sum s_j^2).
    rank : int
        Number of singular values above ``TOL_SVD * s[0]``.
    holder_s : float or None
        Caller-asserted Hoelder exponent of t -> k(t, u), when known.
    """

    __slots__ = ("grid", "matrix", "u", "s", "vt", "hs_norm", "rank", "holder_s")

    def __init__(self, grid: Grid, matrix, holder_s: Optional[float] = None):
        matrix = np.asarray(matrix, dtype=float)
        n = grid.n_cells
        if matrix.shape != (n, n):
            raise ValueError(f"matrix has shape {matrix.shape}, expected ({n}, {n})")
        matrix = matrix.copy()
        matrix.setflags(write=False)
        u, s, vt = np.linalg.svd(matrix)
        self.grid = grid
        self.matrix = matrix
        self.u = u
        self.s = s
        self.vt = vt
        self.hs_norm = float(np.sqrt(np.sum(s**2)))
        if s[0] > 0.0:
            self.rank = int(np.count_nonzero(s > TOL_SVD * s[0]))
        else:
            self.rank = 0
        self.holder_s = holder_s

    @property
    def n(self) -> int:
        return self.grid.n_cells

    @property
    def norm(self) -> float:
        """Spectral norm, the largest singular value."""
        return float(self.s[0])

    def singular_values(self) -> np.ndarray:
        return self.s

    def __repr__(self):
        return f"DiscreteOperator(n={self.n}, s1={self.norm:.6g}, rank={self.rank})"


@dataclass(frozen=True)
class SourceCondition:
    """Smoothness class x = phi(T*T) v with ||v|| <= radius.

    ``phi`` must be increasing on (0, ||T||^2] with phi(0+) = 0.  The Hoelder
    kind uses phi(t) = t^nu.
    """

    phi: Callable[[float], float]
    radius: float
    kind: str = "custom"
    nu: Optional[float] = None

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        probe = np.array([1e-6, 1e-3, 1e-1, 1.0])
        vals = np.array([self.phi(t) for t in probe], dtype=float)
        if np.any(vals <= 0) or np.any(np.diff(vals) <= 0):
            raise ValueError("phi must be positive and increasing on (0, ||T||^2]")

    @classmethod
    def holder(cls, nu: float, radius: float) -> "SourceCondition":
        if nu <= 0:
            raise ValueError("nu must be positive")
        return cls(phi=lambda t, _nu=nu: t**_nu, radius=radius, kind="holder", nu=nu)


def build_integration_operator(grid: Grid) -> DiscreteOperator:
    """Galerkin matrix of the Volterra integration operator (Tx)(t) = int_0^t x.

    The entries are exact integrals of piecewise-constant functions:
    M_jj = 1/(2n), M_ij = 1/n for i > j, zero above the diagonal.
    """
    n = grid.n_cells
    m = np.tril(np.full((n, n), 1.0 / n), k=-1)
    np.fill_diagonal(m, 0.5 / n)
    return DiscreteOperator(grid, m, holder_s=1.0)


def build_holder_kernel_operator(
    grid: Grid,
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray],
    holder_s: float,
    *,
    volterra: bool = True,
) -> DiscreteOperator:
    """Galerkin matrix of an integral operator with kernel ``k(t, u)``.

    With ``volterra=True`` builds (Tx)(t) = int_0^t k(t, u) x(u) du; with
    ``volterra=False`` builds the Fredholm form (Tx)(t) = int_0^1 k(t, u) x(u) du.
    The kernel is evaluated at cell midpoints, which is exact for constant
    kernels and introduces an O(1/n) error otherwise; that error is of the
    same order as the discretization error the level schedules already model.

    ``holder_s`` is the caller-asserted Hoelder exponent of t -> k(t, u); the
    noise-level estimator's bias analysis requires it in (1/2, 1].
    """
    if not 0.5 < holder_s <= 1.0:
        raise ValueError(f"holder_s must lie in (1/2, 1], got {holder_s}")
    n = grid.n_cells
    mids = grid.midpoints
    tt, uu = np.meshgrid(mids, mids, indexing="ij")
    kv = np.asarray(kernel(tt, uu), dtype=float)
    if kv.shape != (n, n):
        raise ValueError("kernel must evaluate elementwise on (t, u) arrays")
    if volterra:
        # area of {u <= t} within the (i, j) cell pair: full square below the
        # diagonal, half square on it, empty above.
        m = np.tril(kv / n, k=-1)
        np.fill_diagonal(m, np.diag(kv) / (2.0 * n))
    else:
        m = kv / n
    return DiscreteOperator(grid, m, holder_s=holder_s)


def apply(op: DiscreteOperator, x: L2Vector) -> L2Vector:
    """y = Tx in the shared basis."""
    if x.grid != op.grid:
        raise ValueError("operator and vector grids do not match")
    return L2Vector(op.grid, op.matrix @ x.coeffs)


def generalized_inverse_apply(op: DiscreteOperator, y: L2Vector, trunc: int) -> L2Vector:
    """Truncated pseudoinverse sum_{j <= trunc} s_j^{-1} <y, u_j> v_j.

    Intended as the reference solution x+ = T+ y in experiments; ``trunc``
    must not exceed the numerical rank.
    """
    if y.grid != op.grid:
        raise ValueError("operator and vector grids do not match")
    if not 1 <= trunc <= op.rank:
        raise ValueError(f"trunc must lie in [1, rank={op.rank}], got {trunc}")
    uy = op.u[:, :trunc].T @ y.coeffs
    return L2Vector(op.grid, op.vt[:trunc].T @ (uy / op.s[:trunc]))


def _embedding_matrix(n_coarse: int, n_fine: int) -> np.ndarray:
    """Isometric inclusion of the coarse indicator span into the fine one."""
    if n_fine % n_coarse != 0:
        raise ValueError(f"grids not nested: {n_coarse} does not divide {n_fine}")
    block = n_fine // n_coarse
    e = np.zeros((n_fine, n_coarse))
    for i in range(n_coarse):
        e[i * block : (i + 1) * block, i] = np.sqrt(n_coarse / n_fine)
    return e


def discretization_defect(op: DiscreteOperator, full_op: DiscreteOperator) -> float:
    """Spectral norm of (I - Q) T estimated against a finer reference grid.

    ``full_op`` plays the role of T on the reference grid; ``op`` determines
    rank(Q) through its (coarser, nested) grid.
    """
    n_c, n_f = op.n, full_op.n
    if n_f % n_c != 0:
        raise ValueError(f"grids not nested: {n_c} does not divide {n_f}")
    e = _embedding_matrix(n_c, n_f)
    residual = full_op.matrix - e @ (e.T @ full_op.matrix)
    return float(np.linalg.svd(residual, compute_uv=False)[0])


def save_operator(op: DiscreteOperator, path) -> None:
    """Write the matrix row-major as CSV after a header line ``n=<int>``."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"n={op.n}\n")
        for row in op.matrix:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def load_operator(path) -> DiscreteOperator:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header.startswith("n="):
            raise ValueError(f"malformed operator file header: {header!r}")
        n = int(header[2:])
        rows = [
            np.array([float(v) for v in line.split(",")])
            for line in fh
            if line.strip()
        ]
    matrix = np.vstack(rows)
    if matrix.shape != (n, n):
        raise ValueError(f"operator file promised n={n} but holds {matrix.shape}")
    return DiscreteOperator(Grid(n), matrix)
