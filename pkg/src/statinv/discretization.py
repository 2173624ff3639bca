"""Projections onto nested grids and the coupled level schedule n(alpha, delta).

The projection Q onto span{phi_1, ..., phi_n} of a coarser nested grid is
exact block averaging.  The level schedule combines the two coupling rules

    n1(alpha) = ceil(c1 * alpha^(-1/(2r)))   and   n2(delta) = ceil(c2 * delta^(-eta))

as n(alpha, delta) = max(n1, n2), capped at ``n_max``.  Setting c2 = 0
recovers the pure alpha-coupled rule as a special case.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataUnavailableError
from .grid import Grid, L2Vector
from .noise import Observation
from .operators import DiscreteOperator

__all__ = [
    "LevelSchedule",
    "n_of",
    "nested_level",
    "project",
    "project_vector",
    "embed_vector",
    "project_operator",
    "LevelData",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LevelSchedule:
    """Parameters of the discretization-level rule n(alpha, delta).

    ``r`` is the spectral decay exponent (set to the Hoelder exponent s of
    the exact data when coupling to the noise-level estimator); ``eta`` must
    satisfy 2/(1+2r) <= eta < 2 and defaults to 1/r.  ``c1`` and ``c2`` are
    proportionality constants; only the asymptotic orders are prescribed by
    the theory, so both are calibration knobs.  ``c2 = 0`` disables the
    delta-coupled rule.
    """

    r: float = 1.0
    eta: float | None = None
    c1: float = 1.0
    c2: float = 1.0
    n_max: int = 2**14

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("r must be positive")
        if self.eta is None:
            object.__setattr__(self, "eta", 1.0 / self.r)
        if not 2.0 / (1.0 + 2.0 * self.r) <= self.eta < 2.0:
            raise ValueError(
                f"eta must lie in [2/(1+2r), 2) = [{2.0 / (1.0 + 2.0 * self.r):.4g}, 2), "
                f"got {self.eta}"
            )
        if self.c1 <= 0:
            raise ValueError("c1 must be positive")
        if self.c2 < 0:
            raise ValueError("c2 must be nonnegative")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    def uncapped(self, alpha: float, delta: float) -> int:
        """The raw max rule before applying the ``n_max`` cap."""
        if alpha <= 0 or delta <= 0:
            raise ValueError("alpha and delta must be positive")
        n1 = int(np.ceil(self.c1 * alpha ** (-1.0 / (2.0 * self.r))))
        n2 = int(np.ceil(self.c2 * delta ** (-self.eta))) if self.c2 > 0 else 1
        return max(n1, n2, 1)

    def with_n_max(self, n_max: int) -> "LevelSchedule":
        return replace(self, n_max=n_max)


def n_of(alpha: float, delta: float, sched: LevelSchedule) -> int:
    """n(alpha, delta) = max(ceil(c1 alpha^(-1/2r)), ceil(c2 delta^(-eta))), capped."""
    n = sched.uncapped(alpha, delta)
    if n > sched.n_max:
        log.warning(
            "level schedule requested n=%d at (alpha=%.3g, delta=%.3g); capping at n_max=%d",
            n, alpha, delta, sched.n_max,
        )
        return sched.n_max
    return n


def nested_level(n_requested: int, n_fine: int) -> int:
    """Smallest divisor of ``n_fine`` that is >= ``n_requested``.

    Projections are exact only between nested grids, so requested levels are
    rounded up to the nearest available one.
    """
    if n_requested < 1:
        raise ValueError("requested level must be >= 1")
    if n_requested > n_fine:
        raise DataUnavailableError(
            f"requested level {n_requested} exceeds the finest available grid {n_fine}"
        )
    for n in range(n_requested, n_fine + 1):
        if n_fine % n == 0:
            return n
    return n_fine


def _block_sums(v: np.ndarray, n_coarse: int) -> np.ndarray:
    block = v.shape[0] // n_coarse
    return np.add.reduceat(v, np.arange(0, v.shape[0], block))


def project_vector(vec: L2Vector, n_coarse: int) -> L2Vector:
    """Orthogonal projection onto the coarse indicator span (exact)."""
    n_fine = vec.grid.n_cells
    if n_fine % n_coarse != 0:
        raise ValueError(f"grids not nested: {n_coarse} does not divide {n_fine}")
    scale = np.sqrt(n_coarse / n_fine)
    return L2Vector(Grid(n_coarse), _block_sums(vec.coeffs, n_coarse) * scale)


def embed_vector(vec: L2Vector, grid_fine: Grid) -> L2Vector:
    """Isometric inclusion of a coarse-span function into a finer nested span."""
    n_coarse = vec.grid.n_cells
    n_fine = grid_fine.n_cells
    if n_fine % n_coarse != 0:
        raise ValueError(f"grids not nested: {n_coarse} does not divide {n_fine}")
    block = n_fine // n_coarse
    return L2Vector(grid_fine, np.repeat(vec.coeffs, block) * np.sqrt(n_coarse / n_fine))


def project(obs_fine: Observation, n_coarse: int) -> Observation:
    """Observation of the same realization through the coarser projection Q.

    Block-averaging the cell values is the exact orthogonal projection; for
    white noise the aggregated coordinates are again iid standard normal, so
    the projected observation follows the level-n_coarse model exactly.
    """
    n_fine = obs_fine.n
    if n_fine % n_coarse != 0:
        raise ValueError(f"grids not nested: {n_coarse} does not divide {n_fine}")
    if n_coarse == n_fine:
        return obs_fine
    scale = np.sqrt(n_coarse / n_fine)
    return Observation(
        grid=Grid(n_coarse),
        y_exact=project_vector(obs_fine.y_exact, n_coarse),
        delta=obs_fine.delta,
        coeffs=_block_sums(obs_fine.coeffs, n_coarse) * scale,
        noise=obs_fine.noise,
        seed_used=obs_fine.seed_used,
    )


def project_operator(op_fine: DiscreteOperator, n_coarse: int) -> DiscreteOperator:
    """Galerkin matrix on the coarse grid, obtained exactly as E^T M E.

    Because the coarse basis lies in the fine span, compressing the fine
    Galerkin matrix reproduces the coarse Galerkin matrix of the same
    operator up to rounding.
    """
    n_fine = op_fine.n
    if n_fine % n_coarse != 0:
        raise ValueError(f"grids not nested: {n_coarse} does not divide {n_fine}")
    if n_coarse == n_fine:
        return op_fine
    idx = np.arange(0, n_fine, n_fine // n_coarse)
    rows = np.add.reduceat(op_fine.matrix, idx, axis=0)
    m = np.add.reduceat(rows, idx, axis=1) * (n_coarse / n_fine)
    return DiscreteOperator(Grid(n_coarse), m, holder_s=op_fine.holder_s)


class LevelData:
    """Level-indexed view of one fine observation: n -> Observation at level n.

    Requested levels are rounded up to the nearest nested one; requests
    beyond the fine grid raise :class:`DataUnavailableError`.  All levels
    share the single underlying noise realization.
    """

    def __init__(self, obs_fine: Observation):
        self._obs = obs_fine
        self._cache = {obs_fine.n: obs_fine}

    @property
    def n_fine(self) -> int:
        return self._obs.n

    @property
    def fine(self) -> Observation:
        return self._obs

    def __call__(self, n_requested: int) -> Observation:
        level = nested_level(n_requested, self.n_fine)
        if level not in self._cache:
            self._cache[level] = project(self._obs, level)
        return self._cache[level]
