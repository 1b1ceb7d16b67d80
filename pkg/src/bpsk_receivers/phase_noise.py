"""Gaussian phase diffusion: quadrature over the random phase and displaced count rates.

Every quantity averaged over the phase kick is a 2*pi-periodic function of
the kick whose features narrow as the signal energy grows.  Small kicks are
integrated with Gauss-Hermite; once the Gaussian is wide enough that
Gauss-Hermite nodes can no longer resolve those features, a truncated
trapezoid rule on the real line with spacing 2*pi/order is used instead.
Both converge spectrally, and both integrate over the whole real line.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import roots_hermitenorm

from .pnr import PnrResolution, pnr_probs

DEFAULT_ORDER = 64
# Gauss-Hermite is used while sigma * order <= this
HERMITE_LIMIT = 16.0
# half-width of the trapezoid rule in units of sigma; exp(-81/2) is below 1e-17
TRAPEZOID_HALF_WIDTH = 9.0


@dataclass(frozen=True)
class NoiseModel:
    sigma: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"phase noise sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Quadrature nodes (radians) and weights for averaging over the phase kick."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def key(self) -> bytes:
        """Value identity, usable as a cache key."""
        return self.nodes.tobytes() + self.weights.tobytes()

    def average(self, values: np.ndarray, axis: int = 0) -> np.ndarray:
        """Weighted sum of ``values`` along the node axis."""
        return np.tensordot(self.weights, values, axes=([0], [axis]))


@lru_cache(maxsize=None)
def _hermite_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_hermitenorm(order)
    # symmetric analytically; enforce it bitwise
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w / w.sum()


def _trapezoid_rule(step: float) -> tuple[np.ndarray, np.ndarray]:
    k = int(np.ceil(TRAPEZOID_HALF_WIDTH / step))
    x = np.arange(-k, k + 1) * step
    w = np.exp(-0.5 * x * x)
    return x, w / w.sum()


def make_grid(noise: NoiseModel, order: int = DEFAULT_ORDER) -> PhaseGrid:
    """Quadrature rule for integrals against the N(0, sigma^2) phase density.

    sigma = 0 collapses to a single node at zero so noiseless formulas are
    reproduced exactly.
    """
    if order < 1:
        raise ValueError(f"quadrature order must be >= 1, got {order}")
    sigma = noise.sigma
    if sigma == 0:
        return PhaseGrid(np.zeros(1), np.ones(1))
    if sigma * order <= HERMITE_LIMIT:
        x, w = _hermite_rule(order)
    else:
        x, w = _trapezoid_rule(2.0 * np.pi / (sigma * order))
    return PhaseGrid(sigma * x, w.copy())


def count_rate(k: int, energy, phi):
    """Mean count after the nulling displacement for symbol ``k`` kicked by ``phi``.

    4 E sin^2(phi/2) for k = 0 and 4 E cos^2(phi/2) for k = 1.
    """
    if k == 0:
        return 4.0 * energy * np.sin(0.5 * np.asarray(phi)) ** 2
    if k == 1:
        return 4.0 * energy * np.cos(0.5 * np.asarray(phi)) ** 2
    raise ValueError(f"symbol must be 0 or 1, got {k}")


def count_probs_on_grid(k: int, energy: float, res: PnrResolution, grid: PhaseGrid) -> np.ndarray:
    """q_n(mu_k(energy, phi_i)) with shape (len(grid), M+1)."""
    return pnr_probs(count_rate(k, energy, grid.nodes), res.effective)


def dpnr_count_distribution(
    k: int,
    energy: float,
    noise: NoiseModel,
    res: PnrResolution,
    grid: PhaseGrid | None = None,
) -> np.ndarray:
    """Count distribution p(n|k), n = 0..M, of the displaced dephased state."""
    if energy < 0:
        raise ValueError(f"energy must be non-negative, got {energy}")
    if grid is None:
        grid = make_grid(noise)
    q = count_probs_on_grid(k, energy, res, grid)
    p = grid.average(q)
    res.check_tail(float(p[-1]))
    return p
