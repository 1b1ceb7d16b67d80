"""Quantum limits for the dephased BPSK ensemble.

The Helstrom bound is evaluated from the trace norm of rho_0 - rho_1 in a
truncated Fock basis; the homodyne limit reduces to a single phase average
of a complementary error function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, gammainc, gammaln, xlogy

from .phase_noise import NoiseModel, PhaseGrid, make_grid
from .receivers import signal_amplitude

FOCK_TAIL_TOLERANCE = 1e-12


class FockTruncationError(ValueError):
    def __init__(self, dim: int, required: int):
        super().__init__(f"Fock dimension {dim} too small; need at least {required}")
        self.dim = dim
        self.required = required


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Dense Hermitian matrix on span{|0>, ..., |dim-1>}."""

    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(self.entries - other.entries)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.entries, self.entries)))

    def trace_norm(self) -> float:
        return float(np.abs(self.eigenvalues()).sum())


def default_fock_dim(energy: float) -> int:
    """N_max + 1 with N_max = ceil(E + 12 sqrt(E + 1) + 20)."""
    return math.ceil(energy + 12.0 * math.sqrt(energy + 1.0) + 20.0) + 1


def coherent_tail(energy: float, dim: int) -> float:
    """Probability that a coherent state of the given energy has >= dim photons."""
    if energy == 0:
        return 0.0
    return float(gammainc(dim, energy)) if dim > 0 else 1.0


def required_fock_dim(energy: float) -> int:
    dim = 1
    while coherent_tail(energy, dim) >= FOCK_TAIL_TOLERANCE:
        dim += 1
    return dim


def coherent_coefficients(beta: np.ndarray, dim: int) -> np.ndarray:
    """<n|beta> for n < dim, one column per amplitude, via log-gamma."""
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))
    n = np.arange(dim)[:, None]
    mag = np.abs(beta)[None, :]
    logs = xlogy(n, mag) - 0.5 * mag**2 - 0.5 * gammaln(n + 1.0)
    phase = np.exp(1j * n * np.angle(beta)[None, :])
    return np.exp(logs) * phase


def dephased_rho(
    k: int,
    energy: float,
    noise: NoiseModel,
    grid: PhaseGrid | None = None,
    dim: int | None = None,
) -> FockOperator:
    """Phase-diffused coherent state as a quadrature mixture of coherent projectors."""
    if grid is None:
        grid = make_grid(noise)
    if dim is None:
        dim = default_fock_dim(energy)
    if coherent_tail(energy, dim) >= FOCK_TAIL_TOLERANCE:
        raise FockTruncationError(dim, required_fock_dim(energy))
    beta = signal_amplitude(k, energy) * np.exp(-1j * grid.nodes)
    v = coherent_coefficients(beta, dim)
    rho = (v * grid.weights[None, :]) @ v.conj().T
    return FockOperator(0.5 * (rho + rho.conj().T))


def helstrom_bound(
    energy: float,
    noise: NoiseModel,
    grid: PhaseGrid | None = None,
    dim: int | None = None,
) -> float:
    """Minimum error probability for discriminating the two dephased states."""
    if grid is None:
        grid = make_grid(noise)
    lam = dephased_rho(0, energy, noise, grid, dim) - dephased_rho(1, energy, noise, grid, dim)
    return max(0.0, 0.5 * (1.0 - 0.5 * lam.trace_norm()))


def sql_error(energy: float, noise: NoiseModel, grid: PhaseGrid | None = None) -> float:
    """Homodyne error probability, 0.5 * E_phi[erfc(sqrt(2E) cos phi)]."""
    if grid is None:
        grid = make_grid(noise)
    return 0.5 * float(grid.average(erfc(math.sqrt(2.0 * energy) * np.cos(grid.nodes))))


def homodyne_pdf(x, k: int, energy: float, noise: NoiseModel, grid: PhaseGrid | None = None):
    """Density of the quadrature outcome (shot-noise units) for the dephased symbol ``k``."""
    if grid is None:
        grid = make_grid(noise)
    x = np.asarray(x, dtype=float)
    centers = 2.0 * signal_amplitude(k, energy) * np.cos(grid.nodes)
    dens = np.exp(-0.5 * (x[..., None] - centers) ** 2) / math.sqrt(2.0 * math.pi)
    return dens @ grid.weights
