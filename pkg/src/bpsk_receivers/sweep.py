"""Parameter sweeps, the key=value sweep-spec format and the CSV result format."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from .bounds import default_fock_dim, helstrom_bound, sql_error
from .montecarlo import ShotConfig, simulate_dpnr, simulate_homodyne, simulate_hynore
from .phase_noise import DEFAULT_ORDER, NoiseModel, make_grid
from .pnr import PnrResolution
from .receivers import (
    Receiver,
    ReceiverParams,
    dpnr_error,
    hynore_error_at,
    hynore_optimize,
)

HEADER = ["alpha2", "sigma", "M", "receiver", "p_err", "gain", "tau_opt", "z_opt", "n_th"]
MC_HEADER = ["mc_mean", "mc_stderr"]
VERIFY_TOLERANCE = 1e-9


class SpecError(ValueError):
    """Malformed sweep description; the message names the offending line or field."""


class ConvergenceError(RuntimeError):
    """A quadrature or truncation self-check exceeded its tolerance."""


@dataclass
class Row:
    alpha2: float
    sigma: float
    M: str | None
    receiver: str
    p_err: float
    gain: float | None = None
    tau_opt: float | None = None
    z_opt: float | None = None
    n_th: int | None = None
    mc_mean: float | None = None
    mc_stderr: float | None = None


@dataclass
class SweepSpec:
    variable: str = "alpha2"
    values: list[float] = field(default_factory=list)
    alpha2: float = 1.0
    sigma: float = 0.1
    resolutions: list[PnrResolution] = field(default_factory=lambda: [PnrResolution(1)])
    receivers: list[Receiver] = field(default_factory=lambda: [Receiver.DPNR])
    quad_order: int = DEFAULT_ORDER
    fock_dim: int | None = None
    mc: bool = False
    shots: int = 10**6
    seed: int = 0
    verify: bool = False
    workers: int = 1

    def points(self) -> list[tuple[float, float]]:
        if self.variable == "alpha2":
            return [(v, self.sigma) for v in self.values]
        return [(self.alpha2, v) for v in self.values]


# -- spec parsing -------------------------------------------------------------------

def parse_range(text: str) -> list[float]:
    """Values from ``start:stop:step`` (stop inclusive) or a comma list ``a,b,c``."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("range step must be positive")
        if stop < start:
            return []
        n = int(math.floor((stop - start) / step + 1e-9))
        return [round(start + i * step, 12) for i in range(n + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_bool(text: str) -> bool:
    s = text.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_fock_dim(text: str) -> int | None:
    s = text.strip().lower()
    if s == "auto":
        return None
    dim = int(s)
    if dim < 1:
        raise ValueError("fock dimension must be positive")
    return dim


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise ValueError(f"expected a positive integer, got {text!r}")
    return v


def _variable(text: str) -> str:
    s = text.strip().lower()
    if s not in ("alpha2", "sigma"):
        raise ValueError(f"swept variable must be alpha2 or sigma, got {text!r}")
    return s


def _non_negative(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise ValueError(f"expected a non-negative number, got {text!r}")
    return v


_FIELDS = {
    "sweep": ("variable", _variable),
    "values": ("values", parse_range),
    "alpha2": ("alpha2", _non_negative),
    "sigma": ("sigma", _non_negative),
    "resolution": ("resolutions", lambda s: [PnrResolution.parse(v) for v in s.split(",") if v.strip()]),
    "receivers": ("receivers", lambda s: [Receiver.parse(v) for v in s.split(",") if v.strip()]),
    "quad_order": ("quad_order", _positive_int),
    "fock_dim": ("fock_dim", _parse_fock_dim),
    "mc": ("mc", _parse_bool),
    "shots": ("shots", _positive_int),
    "seed": ("seed", int),
    "verify": ("verify", _parse_bool),
    "workers": ("workers", _positive_int),
}


def read_spec_file(path: str | Path) -> dict[str, tuple[str, str]]:
    """Raw ``key -> (value, origin)`` pairs from a key=value file."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if not sep:
            raise SpecError(f"{path}:{lineno}: expected key=value, got {line!r}")
        if key not in _FIELDS:
            raise SpecError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = (value.strip(), f"{path}:{lineno}")
    return out


def build_spec(raw: dict[str, tuple[str, str]], base: SweepSpec | None = None) -> SweepSpec:
    """Apply raw settings over ``base``; errors name the key and where it came from."""
    spec = replace(base) if base is not None else SweepSpec()
    for key, (value, origin) in raw.items():
        if key not in _FIELDS:
            raise SpecError(f"{origin}: unknown key {key!r}")
        attr, conv = _FIELDS[key]
        try:
            setattr(spec, attr, conv(value))
        except ValueError as exc:
            raise SpecError(f"{origin}: bad value for {key!r}: {exc}") from None
    if not spec.resolutions:
        raise SpecError("resolution: at least one detector resolution is required")
    if not spec.receivers:
        raise SpecError("receivers: at least one receiver is required")
    return spec


# -- evaluation ------------------------------------------------------------------------

def _mc_seed(seed: int, *key) -> int:
    return int(np.random.SeedSequence([seed & (2**63 - 1), *key]).generate_state(1, np.uint64)[0])


def evaluate_point(alpha2: float, sigma: float, spec: SweepSpec, index: int = 0) -> list[Row]:
    """Rows for one (alpha2, sigma) point: SQL, Helstrom and Kennedy once, DPNR/HYNORE per resolution."""
    noise = NoiseModel(sigma)
    grid = make_grid(noise, spec.quad_order)
    p_sql = sql_error(alpha2, noise, grid)

    def gain_of(p):
        return 1.0 - p / p_sql if p_sql > 0 else None

    rows = []
    for receiver in spec.receivers:
        if receiver is Receiver.SQL:
            rows.append(Row(alpha2, sigma, None, receiver.value, p_sql, gain_of(p_sql)))
        elif receiver is Receiver.HELSTROM:
            p = helstrom_bound(alpha2, noise, grid, spec.fock_dim)
            rows.append(Row(alpha2, sigma, None, receiver.value, p, gain_of(p)))
        elif receiver is Receiver.KENNEDY:
            r = dpnr_error(alpha2, noise, PnrResolution(1), grid)
            rows.append(Row(alpha2, sigma, "1", receiver.value, r.p_err, gain_of(r.p_err), n_th=r.n_th))
        else:
            for res in spec.resolutions:
                if receiver is Receiver.DPNR:
                    r = dpnr_error(alpha2, noise, res, grid)
                    rows.append(Row(alpha2, sigma, res.label, receiver.value, r.p_err,
                                    gain_of(r.p_err), n_th=r.n_th))
                else:
                    r = hynore_optimize(alpha2, noise, res, grid)
                    rows.append(Row(alpha2, sigma, res.label, receiver.value, r.p_err,
                                    gain_of(r.p_err), r.tau_opt, r.z_opt, r.n_th))
    if spec.mc:
        for j, row in enumerate(rows):
            _attach_mc(row, spec, _mc_seed(spec.seed, index, j))
    if spec.verify:
        for row in rows:
            verify_row(row, spec)
    return rows


def _row_params(row: Row, spec: SweepSpec) -> ReceiverParams:
    res = _resolution_for(row, spec)
    return ReceiverParams(row.alpha2, row.tau_opt if row.tau_opt is not None else 1.0,
                          row.z_opt or 0.0, res, NoiseModel(row.sigma))


def _resolution_for(row: Row, spec: SweepSpec) -> PnrResolution:
    if row.M is None:
        return PnrResolution(1)
    for res in spec.resolutions:
        if res.label == row.M:
            return res
    return PnrResolution.parse(row.M)


def _attach_mc(row: Row, spec: SweepSpec, seed: int) -> None:
    if row.receiver == Receiver.HELSTROM.value:
        return
    cfg = ShotConfig(spec.shots, seed, _row_params(row, spec))
    if row.receiver == Receiver.SQL.value:
        est = simulate_homodyne(cfg)
    elif row.receiver == Receiver.HYNORE.value:
        est = simulate_hynore(cfg)
    else:
        est = simulate_dpnr(cfg)
    row.mc_mean, row.mc_stderr = est.mean, est.std_err


def recompute_refined(row: Row, spec: SweepSpec) -> float:
    """Row's error probability with doubled quadrature order and Fock dimension + 20.

    Optimized parameters are held fixed at their reported values.
    """
    noise = NoiseModel(row.sigma)
    grid = make_grid(noise, 2 * spec.quad_order)
    if row.receiver == Receiver.SQL.value:
        return sql_error(row.alpha2, noise, grid)
    if row.receiver == Receiver.HELSTROM.value:
        dim = (spec.fock_dim or default_fock_dim(row.alpha2)) + 20
        return helstrom_bound(row.alpha2, noise, grid, dim)
    params = _row_params(row, spec)
    if row.receiver == Receiver.HYNORE.value:
        return hynore_error_at(params, grid)
    return dpnr_error(row.alpha2, noise, params.res, grid).p_err


def verify_row(row: Row, spec: SweepSpec) -> float:
    diff = abs(recompute_refined(row, spec) - row.p_err)
    if diff >= VERIFY_TOLERANCE:
        raise ConvergenceError(
            f"{row.receiver} at alpha2={row.alpha2}, sigma={row.sigma}, M={row.M}: "
            f"refined quadrature moved p_err by {diff:.3g}"
        )
    return diff


def _evaluate_job(job):
    i, (a, s), spec = job
    return evaluate_point(a, s, spec, i)


def run_sweep(spec: SweepSpec) -> list[Row]:
    """Evaluate every point of the sweep; rows come out in swept-variable order."""
    points = sorted(spec.points(), key=lambda p: p[0] if spec.variable == "alpha2" else p[1])
    jobs = [(i, p, spec) for i, p in enumerate(points)]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            chunks = list(pool.map(_evaluate_job, jobs))
    else:
        chunks = [_evaluate_job(job) for job in jobs]
    return [row for chunk in chunks for row in chunk]


# -- CSV --------------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(rows: Iterable[Row], out, mc: bool | None = None) -> None:
    """Write rows to a path or text stream; MC columns are added when any row carries them."""
    rows = list(rows)
    if mc is None:
        mc = any(r.mc_mean is not None for r in rows)
    header = HEADER + (MC_HEADER if mc else [])
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            _write(rows, fh, header)
    else:
        _write(rows, out, header)


def _write(rows, fh, header):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(getattr(r, h)) for h in header])


def rows_to_csv(rows: Iterable[Row], mc: bool | None = None) -> str:
    buf = io.StringIO()
    write_csv(rows, buf, mc)
    return buf.getvalue()


_FLOAT_COLUMNS = {"alpha2", "sigma", "p_err", "gain", "tau_opt", "z_opt", "mc_mean", "mc_stderr"}


def read_csv(source) -> list[Row]:
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return _read(fh)
    return _read(source)


def _read(fh) -> list[Row]:
    reader = csv.DictReader(fh)
    names = {f.name for f in fields(Row)}
    rows = []
    for rec in reader:
        kw = {}
        for key, value in rec.items():
            if key not in names:
                continue
            if value == "":
                kw[key] = None
            elif key in _FLOAT_COLUMNS:
                kw[key] = float(value)
            elif key == "n_th":
                kw[key] = int(value)
            else:
                kw[key] = value
        rows.append(Row(**kw))
    return rows
