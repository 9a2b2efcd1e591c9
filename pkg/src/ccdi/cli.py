"""Command-line front end: ``ccdi <command> [options]``.

Exit codes: 0 success (whatever the test decides), 1 usage or configuration
error, 2 data validation error, 3 internal consistency violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .blocks import AlphabetSpec, SeriesError, count_blocks
from .causality import TestConfig, loglik_ratio_oracle, normality_check, result_from_counts
from .experiments import (
    PAPER_SCALE,
    RegimeError,
    rate_dichotomy_study,
    record,
    trajectory,
    validate_null,
    write_records,
)
from .info import ConsistencyError, PmfError, SupportError
from .markov import ModelError, benchmark_process, load_model, simulate
from .parallel import default_workers
from .seriesio import atomic_write, read_series, write_series
from .spikes import SpikeDataError, load_session, scan_pairs

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONSISTENCY = 0, 1, 2, 3
BUILTIN_MODELS = {"benchmark": benchmark_process}
SELF_CHECK_RTOL = 1e-9


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(records: list[dict], out) -> None:
    for rec in records:
        print(json.dumps(rec, sort_keys=True))
    if out:
        write_records(out, records)


def _config(args, t_default: int = 1) -> TestConfig:
    try:
        t = args.t if args.t is not None else (t_default if args.mode == "cc" else 1)
        return TestConfig(args.k, AlphabetSpec(args.m, args.ell, t), args.alpha, args.mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _model(args):
    if args.builtin:
        if args.builtin not in BUILTIN_MODELS:
            raise UsageError(f"unknown builtin model {args.builtin!r}; choose from {sorted(BUILTIN_MODELS)}")
        return BUILTIN_MODELS[args.builtin]()
    if not args.model:
        raise UsageError("give --model FILE or --builtin NAME")
    try:
        return load_model(args.model)
    except OSError as exc:
        raise DataError(f"{args.model}: {exc.strerror}") from None


def _read(path):
    series, _ = read_series(path)
    return series


# --- commands -----------------------------------------------------------------

def cmd_test(args) -> int:
    x, y = _read(args.x), _read(args.y)
    z = _read(args.z) if args.z else None
    if args.mode == "cc" and z is None:
        raise UsageError("cc mode needs --z")
    if len(x) != len(y) or (z is not None and len(z) != len(x)):
        raise DataError("series lengths differ")
    m = args.m if args.m is not None else max(2, x.cardinality)
    ell = args.ell if args.ell is not None else max(2, y.cardinality)
    t = args.t if args.t is not None else (z.cardinality if z is not None and args.mode == "cc" else 1)
    args.m, args.ell, args.t = m, ell, t
    cfg = _config(args)
    for name, s, size in (("x", x, m), ("y", y, ell), ("z", z, cfg.alphabet.t)):
        if s is not None and (name != "z" or args.mode == "cc") and s.cardinality > size:
            raise DataError(f"{name} series uses {s.cardinality} symbols but the alphabet size is {size}")
    counts = count_blocks(x, y, z if args.mode == "cc" else None, k=cfg.k, alphabet=cfg.alphabet)
    res = result_from_counts(counts, cfg)
    rec = {"schema": "ccdi.test/1", **res.to_record()}
    if args.self_check:
        oracle = loglik_ratio_oracle(counts)
        gap = abs(oracle - res.statistic)
        rec["oracle_statistic"] = oracle
        if gap > SELF_CHECK_RTOL * max(1.0, res.statistic):
            raise ConsistencyError(f"likelihood-ratio oracle {oracle!r} disagrees with 2 n I_hat {res.statistic!r}")
    _emit([rec], args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _model(args)
    if args.length < 1:
        raise UsageError(f"length must be positive, got {args.length}")
    x, y, z = simulate(model, args.length, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    alph = model.alphabet
    for name, vals, card in (("x", x, alph.m), ("y", y, alph.ell), ("z", z, alph.t)):
        write_series(out / f"{name}.txt", vals, {"alphabet": card, "seed": args.seed, "length": args.length})
    print(json.dumps({"schema": "ccdi.simulate/1", "out": str(out), "length": args.length, "seed": args.seed}))
    return EXIT_OK


def cmd_validate_null(args) -> int:
    model = _model(args)
    cfg = _config(args, t_default=model.alphabet.t)
    reps = PAPER_SCALE["reps"] if args.paper_scale else args.reps
    length = PAPER_SCALE["length"] if args.paper_scale else args.length
    rep = validate_null(model, cfg, length, reps, args.seed, workers=args.workers)
    _emit([record(rep, "null_validation", drop=() if args.keep_statistics else ("statistics",))], args.out)
    return EXIT_OK


def cmd_trajectory(args) -> int:
    x, y = _read(args.x), _read(args.y)
    z = _read(args.z) if args.z else None
    if args.mode == "cc" and z is None:
        raise UsageError("cc mode needs --z")
    cfg = _config(args, t_default=z.cardinality if z is not None else 1)
    pts = trajectory(x, y, z, cfg, args.grid)
    _emit([record(p, "trajectory_point") for p in pts], args.out)
    return EXIT_OK


def cmd_dichotomy(args) -> int:
    model = _model(args)
    cfg = _config(args, t_default=model.alphabet.t)
    rep = rate_dichotomy_study(model, cfg, args.grid, args.reps, args.seed, workers=args.workers)
    _emit([record(rep, "dichotomy")], args.out)
    return EXIT_OK


def cmd_normality(args) -> int:
    model = _model(args)
    cfg = _config(args, t_default=model.alphabet.t)
    rep = normality_check(model, cfg, args.length, args.reps, args.seed, workers=args.workers)
    _emit([{"schema": "ccdi.normality/1", **rep.to_record()}], args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    try:
        session = load_session(args.session, bin_ms=args.bin_ms)
    except OSError as exc:
        raise DataError(f"{args.session}: {exc.strerror}") from None
    args.t = 2 if args.confounder != "none" else 1
    args.mode = "cc" if args.confounder != "none" else "uc"
    cfg = _config(args)
    shift = None if args.shift_ms is None else int(round(args.shift_ms / args.bin_ms))
    rep = scan_pairs(session, cfg, args.confounder, exclude_boundaries=args.exclude_boundaries,
                     shift_bins=shift, cross_region_only=not args.all_pairs, workers=args.workers)
    lines = rep.to_lines()
    if args.out:
        atomic_write(args.out, "\n".join(lines) + "\n")
    if args.summary:
        atomic_write(args.summary, rep.table() + "\n")
    print(rep.table())
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def _add_test_options(p, mode_default="cc"):
    p.add_argument("--k", type=int, required=True, help="memory order")
    p.add_argument("--mode", choices=("uc", "cc"), default=mode_default)
    p.add_argument("--m", type=int, default=None, help="X alphabet size")
    p.add_argument("--ell", type=int, default=None, help="Y alphabet size")
    p.add_argument("--t", type=int, default=None, help="Z alphabet size (cc mode)")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")


def _add_model_options(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--model", help="model description file")
    g.add_argument("--builtin", help="builtin model name (benchmark)")


def _add_run_options(p):
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--out", help="write JSON-lines records here")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ccdi", description="Causal conditional directed information tests.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("test", help="UC/CC test on series files")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z")
    _add_test_options(p)
    p.add_argument("--self-check", action="store_true", help="cross-check against the likelihood-ratio oracle")
    p.add_argument("--out")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="simulate a model into x.txt, y.txt, z.txt")
    _add_model_options(p)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate-null", help="Monte Carlo check of the chi-squared null law")
    _add_model_options(p)
    _add_test_options(p, "uc")
    _add_run_options(p)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--length", type=int, default=30000)
    p.add_argument("--paper-scale", action="store_true", help="10000 reps of length 30000")
    p.add_argument("--keep-statistics", action="store_true", help="include every simulated statistic")
    p.set_defaults(func=cmd_validate_null, m=2, ell=2)

    p = sub.add_parser("trajectory", help="test results on growing prefixes")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z")
    _add_test_options(p)
    p.add_argument("--grid", type=int, nargs="+", required=True, help="prefix window counts")
    p.add_argument("--out")
    p.set_defaults(func=cmd_trajectory, m=2, ell=2)

    p = sub.add_parser("dichotomy", help="log-log slope of the mean estimation error")
    _add_model_options(p)
    _add_test_options(p)
    _add_run_options(p)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--grid", type=int, nargs="+", default=[2**e for e in range(10, 18)])
    p.set_defaults(func=cmd_dichotomy, m=2, ell=2)

    p = sub.add_parser("normality", help="standardized-error normality check")
    _add_model_options(p)
    _add_test_options(p)
    _add_run_options(p)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--length", type=int, default=100000)
    p.set_defaults(func=cmd_normality, m=2, ell=2)

    p = sub.add_parser("scan", help="pairwise scan of a spike-train session")
    p.add_argument("--session", required=True, help="directory of .spk files (+ events.evt)")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--confounder", default="none", help="none, events, or unit:<id>")
    p.add_argument("--bin-ms", type=float, default=1.0)
    p.add_argument("--exclude-boundaries", action="store_true", help="drop windows straddling trials")
    p.add_argument("--shift-ms", type=float, default=None, help="re-test rejected pairs with the target delayed")
    p.add_argument("--all-pairs", action="store_true", help="include same-region pairs")
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--out", help="JSON-lines report")
    p.add_argument("--summary", help="text summary table")
    p.set_defaults(func=cmd_scan, m=2, ell=2, t=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        print(f"ccdi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RegimeError, OverflowError) as exc:
        print(f"ccdi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConsistencyError as exc:
        print(f"ccdi: consistency error: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (DataError, SeriesError, ModelError, SpikeDataError, PmfError, SupportError, ValueError) as exc:
        print(f"ccdi: invalid data: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
