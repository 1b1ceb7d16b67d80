"""Photon-counting statistics for finite-resolution PNR detectors.

A PNR(M) detector resolves 0..M-1 photons exactly and pools every count
>= M into the last outcome M.  PNR(1) is an on-off detector.  An "ideal"
detector is represented by a finite cap whose tail mass is monitored.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln, xlogy

DEFAULT_CAP = 30
TAIL_TOLERANCE = 1e-10


class TruncationWarning(UserWarning):
    """Emitted when a capped PNR(inf) surrogate loses more than the allowed tail mass."""


@dataclass(frozen=True)
class PnrResolution:
    """Detector resolution.

    ``m`` is the largest resolvable outcome.  With ``is_infinite`` the
    detector stands for an ideal photon counter and ``cap`` is used instead.
    """

    m: int = 1
    is_infinite: bool = False
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.is_infinite:
            if self.cap < 1:
                raise ValueError(f"cap must be >= 1, got {self.cap}")
        elif self.m < 1:
            raise ValueError(f"resolution must be >= 1, got {self.m}")

    @classmethod
    def infinite(cls, cap: int = DEFAULT_CAP) -> "PnrResolution":
        return cls(m=cap, is_infinite=True, cap=cap)

    @classmethod
    def parse(cls, text: str | int) -> "PnrResolution":
        """Build from ``"3"``, ``3``, ``"inf"`` or ``"inf:40"``."""
        if isinstance(text, int):
            return cls(m=text)
        s = str(text).strip().lower()
        if s.startswith("inf"):
            _, _, cap = s.partition(":")
            return cls.infinite(int(cap) if cap else DEFAULT_CAP)
        return cls(m=int(s))

    @property
    def effective(self) -> int:
        return self.cap if self.is_infinite else self.m

    @property
    def label(self) -> str:
        return "inf" if self.is_infinite else str(self.m)

    def check_tail(self, tail_mass: float) -> None:
        if self.is_infinite and tail_mass >= TAIL_TOLERANCE:
            warnings.warn(
                f"PNR(inf) cap {self.cap} truncates tail mass {tail_mass:.3g}; "
                "raise the cap",
                TruncationWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class CoherentAmplitude:
    re: float
    im: float = 0.0

    @property
    def energy(self) -> float:
        return self.re * self.re + self.im * self.im

    def __complex__(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class HlDistribution:
    """Homodyne-like difference-count distribution, ``values[d + M]`` = S_d."""

    values: np.ndarray

    @property
    def m(self) -> int:
        return (len(self.values) - 1) // 2

    def __getitem__(self, delta: int) -> float:
        if abs(delta) > self.m:
            raise IndexError(delta)
        return float(self.values[delta + self.m])

    @property
    def deltas(self) -> np.ndarray:
        return np.arange(-self.m, self.m + 1)


def poisson_log_terms(mu, m: int) -> np.ndarray:
    """exp(-mu) mu^n / n! for n = 0..m-1, computed in log space.

    Broadcasts over ``mu``; the count axis is appended last.
    """
    mu = np.asarray(mu, dtype=float)[..., None]
    n = np.arange(m, dtype=float)
    return np.exp(xlogy(n, mu) - mu - gammaln(n + 1.0))


def pnr_probs(mu, m: int) -> np.ndarray:
    """Full PNR(m) outcome distribution q_0..q_m for every mean in ``mu``.

    The pooled bin is the regularized lower incomplete gamma P(m, mu), which
    equals Pr[Poisson(mu) >= m] without the cancellation of 1 - sum.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu < 0):
        raise ValueError("mean photon number must be non-negative")
    out = np.empty(mu.shape + (m + 1,))
    out[..., :m] = poisson_log_terms(mu, m)
    out[..., m] = gammainc(m, mu)
    return out


def pnr_prob(n: int, mu: float, res: PnrResolution) -> float:
    """Probability of outcome ``n`` from a PNR detector hit by mean ``mu``."""
    m = res.effective
    if not 0 <= n <= m:
        raise ValueError(f"outcome {n} outside 0..{m}")
    if mu < 0:
        raise ValueError(f"mean photon number must be non-negative, got {mu}")
    probs = pnr_probs(mu, m)
    res.check_tail(float(probs[m]))
    return float(probs[n])


def branch_energies(gamma, z: float) -> tuple[float, float]:
    """Mean counts on the two outputs of a balanced splitter mixing ``gamma`` with LO ``z``."""
    if z < 0:
        raise ValueError(f"LO amplitude must be non-negative, got {z}")
    g = complex(gamma)
    return abs(g + z) ** 2 / 2.0, abs(g - z) ** 2 / 2.0


def hl_from_probs(qp: np.ndarray, qm: np.ndarray) -> np.ndarray:
    """Bin the product of two count distributions by their difference.

    ``qp`` and ``qm`` have shape (..., M+1); the result has shape (..., 2M+1)
    with index ``d + M`` holding Pr[n - m = d].
    """
    m = qp.shape[-1] - 1
    joint = qp[..., :, None] * qm[..., None, :]
    out = np.empty(qp.shape[:-1] + (2 * m + 1,))
    # diagonal with offset o holds the cells n - k = -o
    for o in range(-m, m + 1):
        out[..., m - o] = np.diagonal(joint, offset=o, axis1=-2, axis2=-1).sum(axis=-1)
    return out


def hl_distribution(gamma, z: float, res: PnrResolution) -> HlDistribution:
    """Distribution of the difference photocurrent for input coherent amplitude ``gamma``."""
    mu_p, mu_m = branch_energies(gamma, z)
    m = res.effective
    qp = pnr_probs(mu_p, m)
    qm = pnr_probs(mu_m, m)
    res.check_tail(max(qp[m], qm[m]))
    return HlDistribution(hl_from_probs(qp, qm))
