"""Figures of merit relative to the homodyne limit: gain and maximum tolerable phase noise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bounds import sql_error
from .phase_noise import DEFAULT_ORDER, NoiseModel, make_grid
from .pnr import PnrResolution
from .receivers import Receiver, dpnr_error, hynore_optimize


@dataclass(frozen=True)
class GainValue:
    gain: float

    @property
    def beats_sql(self) -> bool:
        return self.gain > 0


@dataclass(frozen=True)
class SigmaMax:
    sigma_max: float


def gain(p_receiver: float, p_sql: float) -> GainValue:
    """1 - P_receiver / P_SQL; positive when the receiver beats homodyne detection."""
    if p_sql <= 0:
        raise ValueError("gain undefined for a vanishing homodyne error probability")
    return GainValue(1.0 - p_receiver / p_sql)


def receiver_error(energy: float, sigma: float, res: PnrResolution, receiver: Receiver,
                   order: int = DEFAULT_ORDER) -> float:
    noise = NoiseModel(sigma)
    grid = make_grid(noise, order)
    if receiver is Receiver.DPNR:
        return dpnr_error(energy, noise, res, grid).p_err
    if receiver is Receiver.HYNORE:
        return hynore_optimize(energy, noise, res, grid).p_err
    raise ValueError(f"sigma_max is defined for DPNR and HYNORE, not {receiver.value}")


def receiver_gain(energy: float, sigma: float, res: PnrResolution, receiver: Receiver,
                  order: int = DEFAULT_ORDER) -> float:
    p_sql = sql_error(energy, NoiseModel(sigma), make_grid(NoiseModel(sigma), order))
    return gain(receiver_error(energy, sigma, res, receiver, order), p_sql).gain


def sigma_max(
    energy: float,
    res: PnrResolution,
    receiver: Receiver | str = Receiver.DPNR,
    step: float = 0.01,
    sigma_hi: float = 1.5,
    tol: float = 1e-4,
    order: int = DEFAULT_ORDER,
) -> SigmaMax:
    """Largest phase noise at which the receiver still matches or beats homodyne detection.

    The gain need not be monotone in sigma, so the whole grid is scanned
    first and only the last non-negative cell is refined by bisection.
    """
    if energy < 0:
        raise ValueError(f"energy must be non-negative, got {energy}")
    receiver = Receiver.parse(receiver) if isinstance(receiver, str) else receiver
    if energy == 0:
        return SigmaMax(0.0)

    def g(s):
        return receiver_gain(energy, s, res, receiver, order)

    sigmas = np.linspace(0.0, sigma_hi, int(round(sigma_hi / step)) + 1)
    gains = np.array([g(s) for s in sigmas])
    ok = np.nonzero(gains >= 0)[0]
    if ok.size == 0:
        return SigmaMax(0.0)
    i = ok[-1]
    if i == len(sigmas) - 1:
        return SigmaMax(float(sigmas[-1]))
    lo, hi = float(sigmas[i]), float(sigmas[i + 1])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return SigmaMax(lo)
