"""Command-line entry point: experiment grids and single-shot tools.

Exit codes: 0 pass, 2 tolerance failure, 3 numerical abort, 4 config error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import sys

import numpy as np

from . import experiments as ex
from . import gmc, sampler
from .fredholm import FredholmResult, NumericalOverflowError, build_contour, fredholm_det
from .opuc import IndefiniteMomentError, build_basis
from .symbol import DomainError
from .toeplitz import ConvergenceError, continuum_moments, discrete_moments

EXIT_OK, EXIT_TOLERANCE, EXIT_NUMERICAL, EXIT_CONFIG = 0, 2, 3, 4

# grids used when no --config is given
DEFAULT_CONFIGS = {
    "e1": dict(
        symbols=[
            {"singularities": [[0, 0.5]]},
            {"singularities": [[0, 1.0]]},
            {"singularities": [[0, 0.5], ["pi*2/3", 0.5]]},
            {"singularities": [[0, 1.0], ["pi*2/3", 1.0]]},
        ],
        N=[4, 8, 12], M_rule="multiple", M_param=[4],
    ),
    "e2": dict(symbols=[{"singularities": [[0, 1.0]]}, {"alpha": [[0, 0], [2, 0]]}],
               N=[8], M_rule="fixed", M_param=[16, 24, 32, 40, 64, 128]),
    "e3": dict(N=[8, 16, 32, 64], M_rule="square", betas=[1.0], L=[3], deltas=[3.141592653589793, 0.05]),
    "e4": dict(N=[16], M_rule="square", betas=[0.5], L=[1, 2, 4], grid=16),
    "e5": dict(N=[8], M_rule="fixed", M_param=[64], samples=10000, betas=[1.0], L=[3], grid=64),
    "e6": dict(symbols=[{"singularities": [[0, 1.0]]}], N=[8, 16, 32], M_rule="q", M_param=[0.125, 0.25, 0.5]),
}


def _add_global(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="JSON or YAML experiment config")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
    p.add_argument("--out", metavar="PATH", default=None, help="output CSV (default stdout)")
    p.add_argument("--reproducible", action="store_true", help="omit the timestamp line")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent cells")
    p.add_argument("--resume", action="store_true", help="keep finished cells of an existing output file")


def _symbol_arg(p):
    p.add_argument("--symbol", required=True, help='JSON record, e.g. \'{"singularities": [[0, 1]]}\'')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fhgas", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ex.EXPERIMENTS:
        p = sub.add_parser(name, help=f"run experiment {name.upper()}")
        _add_global(p)
    p = sub.add_parser("moments", help="moment table of a symbol")
    _add_global(p)
    _symbol_arg(p)
    p.add_argument("-N", type=int, required=True)
    p.add_argument("-M", type=int, default=None, help="discrete moments over D_M (continuum if omitted)")
    p.add_argument("--tol", type=float, default=1e-13)
    p = sub.add_parser("opuc", help="Verblunsky coefficients of the continuum weight")
    _add_global(p)
    _symbol_arg(p)
    p.add_argument("-N", type=int, required=True)
    p = sub.add_parser("fredholm", help="det(I + K) for one (N, M)")
    _add_global(p)
    _symbol_arg(p)
    p.add_argument("-N", type=int, required=True)
    p.add_argument("-M", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p = sub.add_parser("sample", help="draw gas samples")
    _add_global(p)
    p.add_argument("-N", type=int, required=True)
    p.add_argument("-M", type=int, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--stats", type=int, nargs="*", default=None, help="emit linear statistics for these j")
    p = sub.add_parser("gmc", help="sample the truncated field and its density")
    _add_global(p)
    p.add_argument("-L", type=int, required=True)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--beta", type=float, default=1.0)
    return parser


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def _preamble(fh, name: str, reproducible: bool) -> None:
    fh.write(f"# schema: fhgas-{name} v{ex.SCHEMA_VERSION}\n")
    if not reproducible:
        fh.write(f"# generated: {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")


def _emit(args, name: str, body) -> None:
    buf = io.StringIO()
    _preamble(buf, name, args.reproducible)
    body(buf)
    fh = _open_out(args.out)
    try:
        fh.write(buf.getvalue())
    finally:
        if fh is not sys.stdout:
            fh.close()


def load_config(args) -> ex.ExperimentConfig:
    if args.config:
        cfg = ex.ExperimentConfig.load(args.config)
    else:
        cfg = ex.ExperimentConfig.from_dict(DEFAULT_CONFIGS[args.command])
    cfg.experiment = args.command
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    return cfg.validate()


def run_experiment(args) -> int:
    cfg = load_config(args)
    if args.resume and not cfg.out:
        raise ex.ConfigError("--resume needs an output file")
    outcome = ex.RUNNERS[args.command](
        cfg, reproducible=args.reproducible, resume=args.resume, threads=max(1, args.threads)
    )
    if not cfg.out:
        sys.stdout.write(outcome.text)
    return outcome.exit_code


def _symbol(args):
    try:
        return ex.make_symbol_from(json.loads(args.symbol))
    except json.JSONDecodeError as exc:
        raise ex.ConfigError(f"bad --symbol: {exc}") from exc


def cmd_moments(args) -> int:
    sym = _symbol(args)
    table = discrete_moments(sym, args.M, args.N) if args.M else continuum_moments(sym, args.N, args.tol)
    _emit(args, "moments", table.to_csv)
    return EXIT_OK


def cmd_opuc(args) -> int:
    sym = _symbol(args)
    basis = build_basis(continuum_moments(sym, args.N + 1), args.N)
    _emit(args, "opuc", basis.to_csv)
    return EXIT_OK


def cmd_fredholm(args) -> int:
    sym = _symbol(args)
    contour = build_contour(sym, args.M, epsilon=args.epsilon, N=args.N) if args.epsilon else None
    res = fredholm_det(sym, args.N, args.M, contour=contour)

    def body(fh):
        import csv

        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FredholmResult.CSV_HEADER)
        w.writerow(res.csv_row())

    _emit(args, "fredholm", body)
    return EXIT_OK


def cmd_sample(args) -> int:
    rng = sampler.RngStream(args.seed or 0)
    X = sampler.sample_gas_many(args.N, args.M, args.count, rng)
    if args.stats:
        stats = sampler.linear_statistics(X, args.M, args.stats)
        _emit(args, "statistics", lambda fh: sampler.write_statistics(stats, args.stats, fh))
    else:
        _emit(args, "samples", lambda fh: sampler.write_samples(X, fh))
    return EXIT_OK


def cmd_gmc(args) -> int:
    fs = gmc.sample_field(args.L, gmc.uniform_grid(args.grid), sampler.RngStream(args.seed or 0))
    _emit(args, "gmc", lambda fh: gmc.write_field(fs, args.beta, fh))
    return EXIT_OK


COMMANDS = {"moments": cmd_moments, "opuc": cmd_opuc, "fredholm": cmd_fredholm, "sample": cmd_sample, "gmc": cmd_gmc}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    np.seterr(over="ignore", under="ignore")
    try:
        if args.command in ex.EXPERIMENTS:
            return run_experiment(args)
        return COMMANDS[args.command](args)
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalOverflowError, IndefiniteMomentError, ConvergenceError, ArithmeticError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
