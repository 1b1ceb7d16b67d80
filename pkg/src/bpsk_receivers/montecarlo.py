"""Shot-by-shot simulation of the detection chains, used as an oracle for the analytic formulas.

Every shot draws a symbol, a Gaussian phase kick and independent Poisson
counts for each detector (conditioned on the phase), capped at the
detector resolution.  Shots are generated in fixed-size batches, each
driven by its own Philox stream spawned from the seed, so the estimate
depends only on (seed, shots, params) and not on how batches are scheduled.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .phase_noise import count_rate, make_grid
from .receivers import ReceiverParams, map_threshold, reflected_amplitude, signal_amplitude

BATCH = 1 << 20


@dataclass(frozen=True)
class ShotConfig:
    shots: int
    seed: int
    params: ReceiverParams

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")


@dataclass(frozen=True)
class EstimateWithError:
    mean: float
    std_err: float
    shots: int

    @classmethod
    def from_count(cls, errors: int, shots: int) -> "EstimateWithError":
        p = errors / shots
        return cls(p, math.sqrt(p * (1.0 - p) / shots), shots)

    def contains(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(value - self.mean) <= n_sigma * self.std_err


def batch_generators(seed: int, shots: int):
    """(batch size, Generator) pairs; batch i always gets the i-th spawned stream."""
    n_batches = -(-shots // BATCH)
    children = np.random.SeedSequence(seed).spawn(n_batches)
    sizes = [BATCH] * (n_batches - 1) + [shots - BATCH * (n_batches - 1)]
    return [(size, np.random.Generator(np.random.Philox(child))) for size, child in zip(sizes, children)]


def _run(cfg: ShotConfig, batch_fn, workers: int) -> EstimateWithError:
    jobs = batch_generators(cfg.seed, cfg.shots)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            tallies = list(pool.map(lambda job: batch_fn(*job), jobs))
    else:
        tallies = [batch_fn(*job) for job in jobs]
    return EstimateWithError.from_count(int(sum(tallies)), cfg.shots)


def _capped_poisson(rng, mean, m):
    return np.minimum(rng.poisson(mean), m)


def _symbols_and_phases(rng, size, sigma):
    k = rng.integers(0, 2, size)
    phi = rng.normal(0.0, sigma, size) if sigma > 0 else np.zeros(size)
    return k, phi


def simulate_dpnr(cfg: ShotConfig, workers: int = 1) -> EstimateWithError:
    """Displace, count with PNR(M), decide "1" when the count reaches the MAP threshold."""
    p = cfg.params
    m = p.res.effective
    grid = make_grid(p.noise)
    n_th = map_threshold(p.energy, p.noise, p.res, grid, locate_root=False).n_th

    def batch(size, rng):
        k, phi = _symbols_and_phases(rng, size, p.noise.sigma)
        mu = np.where(k == 0, count_rate(0, p.energy, phi), count_rate(1, p.energy, phi))
        n = _capped_poisson(rng, mu, m)
        decision = (n >= n_th).astype(k.dtype)
        return np.count_nonzero(decision != k)

    return _run(cfg, batch, workers)


def simulate_hynore(cfg: ShotConfig, workers: int = 1, return_deltas: bool = False):
    """Split, HL-detect the reflected part, displace and count the transmitted part.

    With ``return_deltas`` the histogram of the HL outcome over -M..M is
    returned alongside the estimate.
    """
    p = cfg.params
    m = p.res.effective
    et = p.tau * p.energy
    grid = make_grid(p.noise)
    n_th = map_threshold(et, p.noise, p.res, grid, locate_root=False).n_th
    r = np.array([reflected_amplitude(0, p.energy, p.tau), reflected_amplitude(1, p.energy, p.tau)])
    hist = np.zeros(2 * m + 1, dtype=np.int64)

    def batch(size, rng):
        k, phi = _symbols_and_phases(rng, size, p.noise.sigma)
        gamma = r[k] * np.exp(-1j * phi)
        n_plus = _capped_poisson(rng, np.abs(gamma + p.z) ** 2 / 2.0, m)
        n_minus = _capped_poisson(rng, np.abs(gamma - p.z) ** 2 / 2.0, m)
        delta = n_plus - n_minus
        nonneg = delta >= 0
        # D(+sqrt(tau) alpha) leaves mu_k, D(-sqrt(tau) alpha) leaves mu_{k xor 1}
        j = np.where(nonneg, k, 1 - k)
        mu = np.where(j == 0, count_rate(0, et, phi), count_rate(1, et, phi))
        high = _capped_poisson(rng, mu, m) >= n_th
        decision = np.where(nonneg, high, ~high).astype(k.dtype)
        if return_deltas:
            hist_part = np.bincount(delta + m, minlength=2 * m + 1)
            return np.count_nonzero(decision != k), hist_part
        return np.count_nonzero(decision != k)

    if not return_deltas:
        return _run(cfg, batch, workers)
    errors = 0
    for size, rng in batch_generators(cfg.seed, cfg.shots):
        e, h = batch(size, rng)
        errors += e
        hist += h
    return EstimateWithError.from_count(errors, cfg.shots), hist


def simulate_homodyne(cfg: ShotConfig, workers: int = 1) -> EstimateWithError:
    """Ideal homodyne on the dephased signal, deciding by the sign of the quadrature."""
    p = cfg.params
    amp = np.array([signal_amplitude(0, p.energy), signal_amplitude(1, p.energy)])

    def batch(size, rng):
        k, phi = _symbols_and_phases(rng, size, p.noise.sigma)
        x = rng.normal(2.0 * amp[k] * np.cos(phi), 1.0)
        decision = (x >= 0).astype(k.dtype)
        return np.count_nonzero(decision != k)

    return _run(cfg, batch, workers)
