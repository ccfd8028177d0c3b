"""Command line entry point.

Examples::

    tiltdiode ness --n-sites 4 --interaction 5 --tilt 2.15
    tiltdiode sweep --config configs/resonances_n4.ini --out runs/n4.csv --threads 4
    tiltdiode noninteracting --n-sites 100 --tilt 0.06
    tiltdiode fit runs/scaling.csv --x n_sites --y current

Exit codes: 0 success, 1 configuration error, 2 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from .sweep import SOLVERS, ConfigError, SweepConfig, fit_exponential, format_float, load_config, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2

log = logging.getLogger("tiltdiode")


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _point_args(p: argparse.ArgumentParser, single: bool = False) -> None:
    p.add_argument("--n-sites", type=int, nargs=None if single else "+")
    p.add_argument("--interaction", type=float, nargs=None if single else "+")
    p.add_argument("--tilt", type=float, nargs=None if single else "+")
    if not single:
        p.add_argument("--rescaled-tilt", type=float, nargs="+", help="V = E N grid")
    p.add_argument("--driving", type=float)
    p.add_argument("--coupling", type=float)
    p.add_argument("--hopping", type=float)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI sweep configuration")
    p.add_argument("--out", help="output CSV path (summary goes to <out>.json)")
    p.add_argument("--digits", type=int, help="decimal digits for the extended-precision ansatz")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--check-oracle", action="store_true",
                   help="verify Delta = 0 Lindblad points against the noninteracting solver")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tiltdiode", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ness", help="steady state observables at one point")
    _common(p)
    _point_args(p, single=True)
    p.add_argument("--method", default="auto", choices=("auto", "dense", "iterative", "direct"))

    p = sub.add_parser("sweep", help="run the sweep described by --config")
    _common(p)
    _point_args(p)
    p.add_argument("--solver", choices=SOLVERS)

    for name in ("noninteracting", "ansatz", "spectrum", "mesoleads"):
        p = sub.add_parser(name, help=f"sweep with the {name} solver")
        _common(p)
        _point_args(p)
        p.add_argument("--populations", action="store_true", help="add site population columns")
        if name == "spectrum":
            p.add_argument("--sector", help="CP sector label, e.g. 2e or 1|3o")

    p = sub.add_parser("fit", help="exponential fit ln y = intercept + slope x on a CSV")
    _common(p)
    p.add_argument("csv", nargs="?", help="input CSV (defaults to --out)")
    p.add_argument("--x", required=True, help="column for x")
    p.add_argument("--y", required=True, help="column for y (absolute values are fitted)")
    return parser


def _as_tuple(v):
    return None if v is None else tuple(v)


def _sweep_config(args, solver=None) -> SweepConfig:
    overrides = dict(
        solver=solver or getattr(args, "solver", None),
        n_sites=_as_tuple(args.n_sites),
        interaction=_as_tuple(args.interaction),
        driving=args.driving,
        coupling=args.coupling,
        hopping=args.hopping,
        digits=args.digits,
        check_oracle=True if args.check_oracle else None,
        populations=True if getattr(args, "populations", False) else None,
        sector=getattr(args, "sector", None),
    )
    if args.tilt is not None:
        overrides.update(tilt=tuple(args.tilt), rescaled_tilt=())
    if getattr(args, "rescaled_tilt", None) is not None:
        overrides.update(rescaled_tilt=tuple(args.rescaled_tilt), tilt=())
    if args.config:
        return load_config(args.config, **overrides)
    kw = {k: v for k, v in overrides.items() if v is not None}
    kw.setdefault("interaction", (0.0,))
    try:
        return SweepConfig(**kw)
    except TypeError as exc:
        raise ConfigError(f"incomplete configuration: {exc}") from exc


def _cmd_ness(args) -> int:
    from .lindblad import ness
    from .model import ModelParams
    from .observables import observables

    if args.n_sites is None:
        raise ConfigError("ness needs --n-sites")
    kw = {
        k: getattr(args, k)
        for k in ("interaction", "tilt", "driving", "coupling", "hopping")
        if getattr(args, k) is not None
    }
    try:
        p = ModelParams(args.n_sites, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rho = ness(p, args.method)
    obs = observables(rho, p)
    out = {
        "n_sites": p.n_sites,
        "interaction": p.interaction,
        "tilt": p.tilt,
        "driving": p.driving,
        "current": obs.current,
        "bond_currents": obs.bond_currents.tolist(),
        "current_from_n1": obs.current_from_n1,
        "populations": obs.populations.tolist(),
        "impurity": obs.impurity,
        "osee": obs.osee,
        "residual": rho.residual,
    }
    text = json.dumps(out, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def _cmd_sweep(args, solver=None) -> int:
    cfg = _sweep_config(args, solver)
    if not args.out:
        raise ConfigError("--out is required for sweeps")
    summary = run_sweep(cfg, args.out, threads=max(1, args.threads))
    print(json.dumps({k: summary[k] for k in ("solver", "points", "errors")}))
    return EXIT_SOLVER if summary["errors"] else EXIT_OK


def _cmd_fit(args) -> int:
    path = args.csv or args.out
    if not path:
        raise ConfigError("fit needs an input CSV")
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = [r for r in csv.DictReader(fh) if not r.get("error")]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if rows and (args.x not in rows[0] or args.y not in rows[0]):
        raise ConfigError(f"columns {args.x!r} or {args.y!r} missing from {path}")
    x = np.array([float(r[args.x]) for r in rows])
    y = np.abs(np.array([float(r[args.y]) for r in rows]))
    try:
        res = fit_exponential(x, y)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(json.dumps({"slope": format_float(res.slope), "intercept": format_float(res.intercept),
                      "stderr": format_float(res.stderr), "n_points": res.n_points}))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "ness":
            return _cmd_ness(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_sweep(args, solver=args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, RuntimeError, ArithmeticError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
