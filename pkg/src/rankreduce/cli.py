"""Command-line front end.

    rankreduce run --config exp.cfg --mode rank-sweep --out sweep.csv

Exit codes: 0 on success, 2 for usage or config problems, 1 for runtime
failures (aborted trials, unwritable output). All diagnostics go to stderr;
the only product is the CSV file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .exceptions import ConfigError, NumericalError, TrialError
from .experiment import (
    CONVERGENCE,
    RANK_SWEEP,
    config_echo_lines,
    parse_config,
    replace_config,
    run_convergence,
    run_rank_sweep,
    write_csv,
)

_USAGE_EXIT = 2
_RUNTIME_EXIT = 1


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer, got {value}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankreduce",
        description="Seeded Monte-Carlo experiments for reduced-rank adaptive receivers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute one experiment and write a CSV")
    run.add_argument("--config", required=True, help="key=value experiment definition file")
    run.add_argument(
        "--mode",
        required=True,
        choices=(RANK_SWEEP, CONVERGENCE),
        help="aggregate per rank, or per symbol index at a single rank",
    )
    run.add_argument("--out", required=True, help="destination CSV path")
    run.add_argument("--seed", type=_u64, default=None, help="override the config's base seed")
    run.add_argument("--runs", type=_positive_int, default=None, help="override the run count")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"rankreduce: cannot read config: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    try:
        cfg = parse_config(text)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.runs is not None:
            overrides["runs"] = args.runs
        if overrides:
            cfg = replace_config(cfg, **overrides)
        runner = run_rank_sweep if args.mode == RANK_SWEEP else run_convergence
        rows = runner(cfg)
    except ConfigError as exc:
        print(f"rankreduce: config error: {exc}", file=sys.stderr)
        return _USAGE_EXIT
    except (TrialError, NumericalError) as exc:
        print(f"rankreduce: run failed: {exc}", file=sys.stderr)
        return _RUNTIME_EXIT
    try:
        write_csv(rows, args.out, echo=config_echo_lines(cfg))
    except OSError as exc:
        print(f"rankreduce: cannot write output: {exc}", file=sys.stderr)
        return _RUNTIME_EXIT
    return 0


if __name__ == "__main__":
    sys.exit(main())
