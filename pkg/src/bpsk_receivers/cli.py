"""Command-line front end.

Exit codes: 0 success, 2 malformed spec or flags, 3 convergence self-check failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .merit import receiver_error, sigma_max
from .phase_noise import NoiseModel, make_grid
from .bounds import sql_error
from .receivers import Receiver
from .sweep import (
    ConvergenceError,
    Row,
    SpecError,
    SweepSpec,
    build_spec,
    evaluate_point,
    parse_range,
    read_spec_file,
    run_sweep,
    verify_row,
    write_csv,
)

log = logging.getLogger("bpsk_receivers")

EXIT_SPEC = 2
EXIT_VERIFY = 3

# flag dest -> spec key
_COMMON = {
    "resolution": "resolution",
    "receivers": "receivers",
    "quad_order": "quad_order",
    "fock_dim": "fock_dim",
    "shots": "shots",
    "seed": "seed",
    "workers": "workers",
}


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--resolution", help="detector resolutions, e.g. 1,2,3,inf")
    p.add_argument("--receivers", help="comma list of Kennedy,DPNR,HYNORE,SQL,Helstrom")
    p.add_argument("--quad-order", dest="quad_order", help="phase quadrature order (default 64)")
    p.add_argument("--fock-dim", dest="fock_dim", help="Fock truncation dimension or 'auto'")
    p.add_argument("--shots", help="Monte Carlo shots per row")
    p.add_argument("--seed", help="Monte Carlo seed")
    p.add_argument("--workers", help="worker processes for sweep points")
    p.add_argument("--mc", action="store_true", default=None, help="add Monte Carlo columns")
    p.add_argument("--verify", action="store_true", default=None,
                   help="recheck every row with doubled quadrature order (exit 3 on failure)")
    p.add_argument("--out", help="CSV output file (default stdout)")
    p.add_argument("--spec", help="key=value sweep description; flags override it")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpsk-rx", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep-energy", help="sweep the signal energy at fixed phase noise")
    p.add_argument("--alpha2", help="energies: start:stop:step or comma list")
    p.add_argument("--sigma", help="phase noise standard deviation (rad)")
    _common_flags(p)

    p = sub.add_parser("sweep-sigma", help="sweep the phase noise at fixed energy")
    p.add_argument("--sigma", help="noise values: start:stop:step or comma list")
    p.add_argument("--alpha2", help="signal energy")
    _common_flags(p)

    p = sub.add_parser("sigma-max", help="maximum tolerable phase noise per energy")
    p.add_argument("--alpha2", help="energies: start:stop:step or comma list")
    p.add_argument("--sigma-step", dest="sigma_step", type=float, default=0.01)
    p.add_argument("--sigma-hi", dest="sigma_hi", type=float, default=1.5)
    _common_flags(p)

    p = sub.add_parser("optimize", help="optimal transmissivity and LO amplitude at one point")
    p.add_argument("--alpha2", help="signal energy")
    p.add_argument("--sigma", help="phase noise standard deviation (rad)")
    _common_flags(p)

    p = sub.add_parser("validate", help="Monte Carlo estimates next to the analytic values")
    p.add_argument("--alpha2", help="energies: start:stop:step or comma list")
    p.add_argument("--sigma", help="noise values: start:stop:step or comma list")
    _common_flags(p)
    return parser


def _raw_settings(args) -> dict[str, tuple[str, str]]:
    raw = read_spec_file(args.spec) if args.spec else {}
    for dest, key in _COMMON.items():
        value = getattr(args, dest, None)
        if value is not None:
            raw[key] = (str(value), f"--{dest.replace('_', '-')}")
    for flag in ("mc", "verify"):
        if getattr(args, flag, None):
            raw[flag] = ("true", f"--{flag}")
    return raw


def _point_settings(args) -> dict[str, tuple[str, str]]:
    raw = _raw_settings(args)
    for key in ("alpha2", "sigma"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = (value, f"--{key}")
    return raw


def _single(raw, key, default=None) -> float:
    if key not in raw:
        if default is None:
            raise SpecError(f"--{key} is required")
        return default
    value, origin = raw.pop(key)
    try:
        values = parse_range(value)
    except ValueError as exc:
        raise SpecError(f"{origin}: bad value for {key!r}: {exc}") from None
    if len(values) != 1:
        raise SpecError(f"{origin}: {key} must be a single value, got {value!r}")
    return values[0]


def _list(raw, key) -> list[float]:
    if key not in raw:
        raise SpecError(f"--{key} is required")
    value, origin = raw.pop(key)
    try:
        return parse_range(value)
    except ValueError as exc:
        raise SpecError(f"{origin}: bad value for {key!r}: {exc}") from None


def _sweep_spec(args, variable: str) -> SweepSpec:
    raw = _point_settings(args)
    raw.setdefault("sweep", (variable, "command"))
    swept = raw.pop(variable, None)
    if swept is not None:
        raw["values"] = swept
    return build_spec(raw)


def cmd_sweep(args, variable: str) -> list[Row]:
    spec = _sweep_spec(args, variable)
    spec.variable = variable
    return run_sweep(spec)


def cmd_optimize(args) -> list[Row]:
    raw = _point_settings(args)
    a = _single(raw, "alpha2")
    s = _single(raw, "sigma", 0.1)
    raw.setdefault("receivers", ("HYNORE", "command"))
    spec = build_spec(raw)
    return evaluate_point(a, s, spec)


def cmd_validate(args) -> list[Row]:
    raw = _point_settings(args)
    energies = _list(raw, "alpha2")
    sigmas = _list(raw, "sigma") if "sigma" in raw else [0.1]
    raw["mc"] = ("true", "command")
    raw.setdefault("receivers", ("DPNR,HYNORE,SQL", "command"))
    spec = build_spec(raw)
    rows = []
    for i, (a, s) in enumerate((a, s) for a in energies for s in sigmas):
        rows.extend(evaluate_point(a, s, spec, i))
    outside = [r for r in rows if r.mc_stderr is not None
               and abs(r.mc_mean - r.p_err) > 3 * r.mc_stderr]
    log.log(logging.WARNING if outside else logging.INFO, "%d of %d rows outside 3 standard errors",
            len(outside), sum(r.mc_stderr is not None for r in rows))
    return rows


def cmd_sigma_max(args) -> list[Row]:
    raw = _point_settings(args)
    energies = _list(raw, "alpha2")
    raw.setdefault("receivers", ("DPNR,HYNORE", "command"))
    spec = build_spec(raw)
    rows = []
    for a in energies:
        for res in spec.resolutions:
            for rec in spec.receivers:
                if rec not in (Receiver.DPNR, Receiver.HYNORE):
                    raise SpecError(f"receivers: sigma-max supports DPNR and HYNORE, not {rec.value}")
                sm = sigma_max(a, res, rec, step=args.sigma_step, sigma_hi=args.sigma_hi,
                               order=spec.quad_order).sigma_max
                p = receiver_error(a, sm, res, rec, spec.quad_order)
                noise = NoiseModel(sm)
                p_sql = sql_error(a, noise, make_grid(noise, spec.quad_order))
                g = 1.0 - p / p_sql if p_sql > 0 else None
                rows.append(Row(a, sm, res.label, rec.value, p, g))
                log.info("alpha2=%g M=%s %s sigma_max=%.4f", a, res.label, rec.value, sm)
    if spec.verify:
        for row in rows:
            verify_row(row, spec)
    return rows


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "sweep-energy":
            rows = cmd_sweep(args, "alpha2")
        elif args.command == "sweep-sigma":
            rows = cmd_sweep(args, "sigma")
        elif args.command == "optimize":
            rows = cmd_optimize(args)
        elif args.command == "validate":
            rows = cmd_validate(args)
        else:
            rows = cmd_sigma_max(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except ConvergenceError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    write_csv(rows, args.out if args.out else sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
