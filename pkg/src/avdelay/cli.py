"""Command-line interface: ``avdelay {simulate,analyze,coverage,boundary}``.

Every flag can also be set through an ``AVDELAY_<FLAG>`` environment
variable (dashes become underscores), e.g. ``AVDELAY_SEED=3``. Exit codes:
0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .confidence import DEFAULT_ETA_SQ
from .core import apply_switching
from .estimators import AugmentationPolicy, aipw_paths, ipw_paths
from .harness import analysis_series, boundary_table, coverage_study
from .io import (
    read_observed_csv,
    read_oracle_csv,
    write_manifest,
    write_observed_csv,
    write_oracle_csv,
)
from .simulation import SimConfig, draw_assignment, generate_dataset, unit_rng

log = logging.getLogger("avdelay")

ENV_PREFIX = "AVDELAY_"
_ASSIGN_STREAM = 2


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _csv_list(choices):
    def parse(text):
        items = [x.strip() for x in str(text).split(",") if x.strip()]
        bad = [x for x in items if x not in choices]
        if bad or not items:
            raise argparse.ArgumentTypeError(f"expected comma-separated values from {choices}")
        return tuple(items)
    return parse


def _v_grid(text):
    text = str(text).strip()
    try:
        if text.startswith("log:"):
            start, stop, num = text[4:].split(":")
            return np.logspace(float(start), float(stop), int(num))
        return np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}") from None


def _truthy(text) -> bool:
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def _apply_env_defaults(parser: argparse.ArgumentParser) -> None:
    for action in parser._actions:
        if not action.option_strings or action.dest == "help":
            continue
        value = os.environ.get(ENV_PREFIX + action.dest.upper())
        if value is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            action.default = _truthy(value)
        else:
            action.default = action.type(value) if action.type else value
            action.required = False


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_frame(frame, path) -> None:
    frame.to_csv(path, index=False, lineterminator="\n")


def cmd_simulate(args) -> int:
    started = time.time()
    cfg = SimConfig(n_units=args.n, seed=args.seed, counting=args.counting, pi=args.pi)
    table = generate_dataset(cfg)
    w = draw_assignment(table, unit_rng(cfg.seed, _ASSIGN_STREAM))
    out = _out_dir(args.out)
    oracle, observed = out / "oracle.csv", out / "observed.csv"
    write_oracle_csv(oracle, table, w)
    write_observed_csv(observed, apply_switching(table, w))
    write_manifest(out / "manifest.json", "simulate", cfg.to_dict(), cfg.seed, [oracle, observed], started)
    log.info("wrote %d units to %s", len(table), out)
    return 0


def _input_kind(path) -> str:
    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    header = {h.strip() for h in header}
    if {"t0", "t1", "y0", "y1"} <= header:
        return "oracle"
    if {"t_obs", "y_obs"} <= header:
        return "observed"
    raise UsageError(f"{path}: header matches neither the observed nor the oracle schema")


def cmd_analyze(args) -> int:
    started = time.time()
    estimator = "aipw" if args.aipw else args.estimator
    kind = _input_kind(args.input)
    if estimator == "aipw":
        if kind != "oracle":
            raise UsageError("AIPW needs oracle input (t0,t1,y0,y1 plus the assignment column w)")
        table, w = read_oracle_csv(args.input, return_assignment=True)
        paths = aipw_paths(table, w, AugmentationPolicy.running_mean())
    elif kind == "oracle":
        table, w = read_oracle_csv(args.input, return_assignment=True)
        paths = ipw_paths(apply_switching(table, w))
    else:
        paths = ipw_paths(read_observed_csv(args.input))
    out = _out_dir(args.out)
    series = out / "series.csv"
    _write_frame(analysis_series(paths, args.alpha, args.eta_sq), series)
    config = {"input": str(args.input), "estimator": estimator, "alpha": args.alpha, "eta_sq": args.eta_sq}
    write_manifest(out / "manifest.json", "analyze", config, None, [series], started)
    return 0


def cmd_coverage(args) -> int:
    started = time.time()
    if args.reps < 2:
        raise UsageError("--reps must be >= 2")
    if args.input:
        table = read_oracle_csv(args.input)
        sim = None
    else:
        sim = SimConfig(n_units=args.n, seed=args.seed, counting=args.counting)
        table = generate_dataset(sim)
    report = coverage_study(table, reps=args.reps, seed=args.seed, estimators=args.estimators,
                            variance_modes=args.variance_mode, alpha=args.alpha,
                            eta_sq=args.eta_sq, n_jobs=args.jobs)
    out = _out_dir(args.out)
    path = out / "coverage.csv"
    _write_frame(report.to_frame(), path)
    config = {
        "reps": args.reps, "estimators": list(args.estimators),
        "variance_modes": list(args.variance_mode), "alpha": args.alpha, "eta_sq": args.eta_sq,
        "input": args.input, "simulation": sim.to_dict() if sim else None,
    }
    # thread count is deliberately not part of the config: outputs do not depend on it
    write_manifest(out / "manifest.json", "coverage", config, args.seed, [path], started)
    return 0


def cmd_boundary(args) -> int:
    started = time.time()
    out = _out_dir(args.out)
    path = out / "boundary.csv"
    _write_frame(boundary_table(args.v_grid, args.alpha, args.eta_sq, args.pi, args.asym_ratio), path)
    config = {"v_grid": [float(v) for v in args.v_grid], "alpha": args.alpha, "eta_sq": args.eta_sq,
              "pi": args.pi, "asym_ratio": args.asym_ratio}
    write_manifest(out / "manifest.json", "boundary", config, None, [path], started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="avdelay", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a synthetic potential-outcome table")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pi", type=float, default=0.5)
    p.add_argument("--counting", action="store_true", help="set every outcome to 1")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="estimates, confidence sequences and p-values")
    p.add_argument("--input", required=True, help="observed or oracle CSV")
    p.add_argument("--estimator", choices=("ipw", "aipw"), default="ipw")
    p.add_argument("--aipw", action="store_true", help="shorthand for --estimator aipw")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--eta-sq", type=float, default=DEFAULT_ETA_SQ)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("coverage", help="Monte Carlo coverage study over assignment redraws")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--counting", action="store_true")
    p.add_argument("--input", default=None, help="oracle CSV to use instead of simulating")
    p.add_argument("--estimators", type=_csv_list(("ipw", "aipw")), default=("ipw", "aipw"))
    p.add_argument("--variance-mode", type=_csv_list(("oracle", "estimated")), default=("oracle", "estimated"))
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--eta-sq", type=float, default=DEFAULT_ETA_SQ)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("boundary", help="tabulate boundary and relative widths")
    p.add_argument("--v-grid", type=_v_grid, default=_v_grid("log:0:10:21"),
                   help="comma list, or log:START:STOP:NUM in powers of ten")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--eta-sq", type=float, default=DEFAULT_ETA_SQ)
    p.add_argument("--pi", type=float, default=0.5)
    p.add_argument("--asym-ratio", type=float, default=1e-2)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_boundary)

    for sp in (parser, *sub.choices.values()):
        _apply_env_defaults(sp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, argparse.ArgumentTypeError) as exc:
        print(f"avdelay: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"avdelay: I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
