"""Error probabilities of the displacement (Kennedy/DPNR) receiver and the hybrid receiver.

Symbols are encoded as |alpha_k> = |(-1)^(k+1) alpha>, so symbol 0 is the
negative amplitude and a displacement by +alpha nulls it.  The hybrid
receiver taps a fraction 1 - tau of the signal into a homodyne-like (HL)
stage whose difference count picks the sign of the displacement applied to
the transmitted part, which is then read out by a PNR detector.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.special import erfc, gammaln, xlogy

from .phase_noise import (
    NoiseModel,
    PhaseGrid,
    count_probs_on_grid,
    count_rate,
    dpnr_count_distribution,
    make_grid,
)
from .pnr import PnrResolution, hl_from_probs, pnr_probs


class Receiver(str, enum.Enum):
    KENNEDY = "Kennedy"
    DPNR = "DPNR"
    HYNORE = "HYNORE"
    SQL = "SQL"
    HELSTROM = "Helstrom"

    @classmethod
    def parse(cls, text: str) -> "Receiver":
        for r in cls:
            if r.value.lower() == text.strip().lower():
                return r
        raise ValueError(f"unknown receiver {text!r}; choose from {[r.value for r in cls]}")


@dataclass(frozen=True)
class ReceiverParams:
    energy: float
    tau: float = 1.0
    z: float = 0.0
    res: PnrResolution = field(default_factory=PnrResolution)
    noise: NoiseModel = field(default_factory=NoiseModel)

    def __post_init__(self):
        if self.energy < 0:
            raise ValueError(f"energy must be non-negative, got {self.energy}")
        if not 0 < self.tau <= 1:
            raise ValueError(f"transmissivity must lie in (0, 1], got {self.tau}")
        if self.z < 0:
            raise ValueError(f"LO amplitude must be non-negative, got {self.z}")


@dataclass(frozen=True)
class MapThreshold:
    n_th: int
    root: float | None = None  # crossing of the two count distributions, if bracketed


@dataclass(frozen=True)
class ErrorReport:
    p_err: float
    receiver: Receiver
    tau_opt: float | None = None
    z_opt: float | None = None
    n_th: int | None = None


# -- noiseless closed forms ---------------------------------------------------

def helstrom_noiseless(energy: float) -> float:
    return 0.5 * (1.0 - math.sqrt(-math.expm1(-4.0 * energy)))


def sql_noiseless(energy: float) -> float:
    return 0.5 * float(erfc(math.sqrt(2.0 * energy)))


def kennedy_noiseless(energy: float) -> float:
    return 0.5 * math.exp(-4.0 * energy)


def kennedy_sql_crossing() -> float:
    """Energy above which the on-off displacement receiver beats homodyne."""
    return brentq(lambda e: kennedy_noiseless(e) - sql_noiseless(e), 0.05, 2.0, xtol=1e-14)


# -- MAP threshold --------------------------------------------------------------

_THRESHOLD_CACHE: dict = {}
_STEPS_PER_COUNT = 20


def _continuous_count_density(x: np.ndarray, mu: np.ndarray, grid: PhaseGrid) -> np.ndarray:
    """Phase average of exp(-mu) mu^x / Gamma(x+1) for real x >= 0."""
    x = np.asarray(x, dtype=float)
    terms = np.exp(xlogy(x[None, :], mu[:, None]) - mu[:, None] - gammaln(x[None, :] + 1.0))
    return grid.average(terms)


def map_threshold(
    energy: float,
    noise: NoiseModel,
    res: PnrResolution,
    grid: PhaseGrid | None = None,
    locate_root: bool = True,
) -> MapThreshold:
    """Smallest count decided as symbol 1.

    The crossing of the two (continuously extended) count distributions is
    located on a scan over (0, M) and polished with Brent's method; the
    threshold is its ceiling, clamped to [1, M].  Without a crossing the
    threshold is 1 if the "1" distribution dominates already, else M.
    The scan contains every integer, so the bracket alone fixes the ceiling;
    ``locate_root=False`` skips the polish and leaves ``root`` unset.
    """
    if energy < 0:
        raise ValueError(f"energy must be non-negative, got {energy}")
    if grid is None:
        grid = make_grid(noise)
    m = res.effective
    key = (float(energy), m, grid.key, locate_root)
    hit = _THRESHOLD_CACHE.get(key)
    if hit is not None:
        return hit

    mu0 = count_rate(0, energy, grid.nodes)
    mu1 = count_rate(1, energy, grid.nodes)

    def f(x):
        x = np.atleast_1d(x)
        return (_continuous_count_density(x, mu0, grid)
                - _continuous_count_density(x, mu1, grid))

    xs = np.linspace(0.0, m, _STEPS_PER_COUNT * m + 1)[1:-1]
    if xs.size == 0:
        result = MapThreshold(1)
    else:
        fx = f(xs)
        below = np.nonzero(fx <= 0)[0]
        if below.size == 0:
            result = MapThreshold(m)
        elif below[0] == 0:
            result = MapThreshold(1)
        else:
            i = below[0]

            def scalar(x):
                return float(f(x)[0])

            # re-evaluate the bracket with the scalar path: near-zero values may
            # change sign between the vectorized and scalar reductions
            a, b = float(xs[i - 1]), float(xs[i])
            if not locate_root:
                root = None
            elif scalar(b) >= 0:
                root = b
            elif scalar(a) <= 0:
                root = a
            else:
                root = brentq(scalar, a, b, xtol=1e-13)
            result = MapThreshold(min(max(math.ceil(b), 1), m), root)
    _THRESHOLD_CACHE[key] = result
    return result


# -- DPNR -------------------------------------------------------------------------

def dpnr_error(
    energy: float,
    noise: NoiseModel,
    res: PnrResolution,
    grid: PhaseGrid | None = None,
) -> ErrorReport:
    """Error probability of displacement + PNR(M) detection with the MAP threshold."""
    if grid is None:
        grid = make_grid(noise)
    th = map_threshold(energy, noise, res, grid, locate_root=False).n_th
    p0 = dpnr_count_distribution(0, energy, noise, res, grid)
    p1 = dpnr_count_distribution(1, energy, noise, res, grid)
    p = 0.5 * (p1[:th].sum() + p0[th:].sum())
    return ErrorReport(float(p), Receiver.DPNR, n_th=th)


# -- hybrid receiver ---------------------------------------------------------------

def signal_amplitude(k: int, energy: float) -> float:
    if k not in (0, 1):
        raise ValueError(f"symbol must be 0 or 1, got {k}")
    return math.sqrt(energy) * (1.0 if k == 1 else -1.0)


def reflected_amplitude(k: int, energy: float, tau: float) -> float:
    """Amplitude sent to the HL stage: -sqrt(1 - tau) alpha_k."""
    return -math.sqrt(1.0 - tau) * signal_amplitude(k, energy)


def _hl_branch_probs(k, energy, tau, z, res, grid):
    """Count distributions on the two HL detectors, shape (..., nodes, M+1)."""
    gamma = reflected_amplitude(k, energy, tau) * np.exp(-1j * grid.nodes)
    z = np.asarray(z, dtype=float)[..., None]
    mu_p = np.abs(gamma + z) ** 2 / 2.0
    mu_m = np.abs(gamma - z) ** 2 / 2.0
    m = res.effective
    return pnr_probs(mu_p, m), pnr_probs(mu_m, m)


def _hl_sign_probs(k, energy, tau, z, res, grid):
    """Pr[Delta < 0] and Pr[Delta >= 0] per phase node, each a sum of positive terms."""
    qp, qm = _hl_branch_probs(k, energy, tau, z, res, grid)
    below = np.cumsum(qp, axis=-1) - qp  # Pr[n < j]
    at_or_above = np.cumsum(qp[..., ::-1], axis=-1)[..., ::-1]  # Pr[n >= j]
    neg = (qm * below).sum(axis=-1)
    nonneg = (qm * at_or_above).sum(axis=-1)
    return neg, nonneg


def hynore_joint(
    k: int,
    params: ReceiverParams,
    delta: int,
    n: int,
    grid: PhaseGrid | None = None,
) -> float:
    """Joint probability of HL outcome ``delta`` and final count ``n`` given symbol ``k``."""
    res = params.res
    m = res.effective
    if not -m <= delta <= m:
        raise ValueError(f"difference count {delta} outside -{m}..{m}")
    if not 0 <= n <= m:
        raise ValueError(f"count {n} outside 0..{m}")
    if k not in (0, 1):
        raise ValueError(f"symbol must be 0 or 1, got {k}")
    if grid is None:
        grid = make_grid(params.noise)
    qp, qm = _hl_branch_probs(k, params.energy, params.tau, params.z, res, grid)
    s = hl_from_probs(qp, qm)[:, delta + m]
    # Delta >= 0 applies D(+sqrt(tau) alpha), otherwise D(-sqrt(tau) alpha)
    j = k if delta >= 0 else 1 - k
    q = count_probs_on_grid(j, params.tau * params.energy, res, grid)[:, n]
    return float(grid.average(s * q))


def _hynore_error(energy, tau, z, res, grid, n_th):
    """Vectorized over ``z``; returns an array with the shape of ``z``."""
    neg0, nonneg0 = _hl_sign_probs(0, energy, tau, z, res, grid)
    neg1, nonneg1 = _hl_sign_probs(1, energy, tau, z, res, grid)
    et = tau * energy
    q0 = count_probs_on_grid(0, et, res, grid)
    q1 = count_probs_on_grid(1, et, res, grid)
    low1 = q1[:, :n_th].sum(axis=-1)    # count < n_th when the state was nulled to mu_1
    high0 = q0[:, n_th:].sum(axis=-1)   # count >= n_th when the state was nulled to mu_0
    integrand = (neg0 + nonneg1) * low1 + (nonneg0 + neg1) * high0
    return 0.5 * integrand @ grid.weights


def hynore_error_at(params: ReceiverParams, grid: PhaseGrid | None = None) -> float:
    """Error probability for fixed transmissivity and LO amplitude.

    The threshold is the MAP threshold at the transmitted energy tau * E.
    """
    if grid is None:
        grid = make_grid(params.noise)
    th = map_threshold(params.tau * params.energy, params.noise, params.res, grid,
                       locate_root=False).n_th
    return float(_hynore_error(params.energy, params.tau, params.z, params.res, grid, th))


def hynore_error_terms(params: ReceiverParams, grid: PhaseGrid | None = None) -> dict:
    """Probabilities of the four (sign of Delta, count vs threshold) cells per symbol.

    Keys are ``(k, delta_nonneg, count_high)``.
    """
    if grid is None:
        grid = make_grid(params.noise)
    e, tau, res = params.energy, params.tau, params.res
    th = map_threshold(tau * e, params.noise, res, grid, locate_root=False).n_th
    out = {}
    for k in (0, 1):
        neg, nonneg = _hl_sign_probs(k, e, tau, params.z, res, grid)
        q_same = count_probs_on_grid(k, tau * e, res, grid)
        q_flip = count_probs_on_grid(1 - k, tau * e, res, grid)
        out[k, True, False] = float(grid.average(nonneg * q_same[:, :th].sum(-1)))
        out[k, True, True] = float(grid.average(nonneg * q_same[:, th:].sum(-1)))
        out[k, False, False] = float(grid.average(neg * q_flip[:, :th].sum(-1)))
        out[k, False, True] = float(grid.average(neg * q_flip[:, th:].sum(-1)))
    return out


def tau_grid() -> np.ndarray:
    """Transmissivities scanned before refinement: linear body plus a log-dense approach to 1."""
    return np.concatenate([
        np.linspace(0.02, 0.88, 20),
        1.0 - np.logspace(-1, -4, 19),
        [1.0],
    ])


def z2_grid(energy: float, res: PnrResolution) -> np.ndarray:
    return np.linspace(0.0, max(4.0 * res.effective, 4.0 * energy), 40)


def hynore_optimize(
    energy: float,
    noise: NoiseModel,
    res: PnrResolution,
    grid: PhaseGrid | None = None,
    refine: int = 3,
) -> ErrorReport:
    """Minimize the hybrid-receiver error over transmissivity and LO amplitude.

    A fixed (tau, z^2) grid is scanned first, tau = 1 included, then the
    ``refine`` best cells are polished with Nelder-Mead.  The best point ever
    evaluated is returned, so the result never exceeds the DPNR error.
    """
    if grid is None:
        grid = make_grid(noise)
    taus = tau_grid()
    z2s = z2_grid(energy, res)
    z2_hi = z2s[-1] * 1.5

    def threshold(tau):
        return map_threshold(tau * energy, noise, res, grid, locate_root=False).n_th

    # rows: tau, columns: z^2
    table = np.array([_hynore_error(energy, t, np.sqrt(z2s), res, grid, threshold(t)) for t in taus])

    evaluated = []  # (p, tau, z2)
    for i, t in enumerate(taus):
        for j, z2 in enumerate(z2s):
            evaluated.append((float(table[i, j]), float(t), float(z2)))

    def objective(x):
        t = min(max(x[0], 1e-6), 1.0)
        z2 = min(max(x[1], 0.0), z2_hi)
        p = float(_hynore_error(energy, t, math.sqrt(z2), res, grid, threshold(t)))
        evaluated.append((p, t, z2))
        return p

    starts = sorted(evaluated)[:refine]
    d_tau = 0.05
    d_z2 = z2s[1] - z2s[0] if len(z2s) > 1 else 1.0
    for p, t, z2 in starts:
        t2 = t - d_tau if t + d_tau > 1.0 else t + d_tau
        z2b = z2 + d_z2 if z2 + d_z2 <= z2_hi else z2 - d_z2
        simplex = np.array([[t, z2], [t2, z2], [t, z2b]])
        minimize(
            objective,
            simplex[0],
            method="Nelder-Mead",
            bounds=[(1e-6, 1.0), (0.0, z2_hi)],
            options={"initial_simplex": simplex, "xatol": 1e-7, "fatol": 1e-15, "maxfev": 400},
        )

    p, t, z2 = min(evaluated)
    t = float(t)
    return ErrorReport(p, Receiver.HYNORE, tau_opt=t, z_opt=math.sqrt(z2), n_th=threshold(t))
