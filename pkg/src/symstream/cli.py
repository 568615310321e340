"""Command-line interface: ``symstream run|inject|compare|bench``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import (
    FragmentError,
    InvariantViolation,
    ReadingError,
    SolverResourceError,
    SpecError,
    TraceError,
)
from .harness import Blank, Bursts, Perturb, bench, bench_csv, compare, dumps_trace, inject, load_trace
from .interval import run_abs
from .monitor import MonitorConfig, run
from .spec_ast import parse_spec

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


def _spec(path: str):
    return parse_spec(Path(path).read_text())


def _config(args) -> MonitorConfig:
    return MonitorConfig(pruning=not getattr(args, "no_prune", False), lookback=getattr(args, "lookback", 0))


def cmd_run(args) -> int:
    spec = _spec(args.spec)
    trace = load_trace(args.trace, spec)
    if args.abs:
        for v in run_abs(spec, trace.readings()):
            print(v.record())
        return EXIT_OK
    for line in run(spec, trace.readings(), _config(args)).records():
        print(line)
    return EXIT_OK


def cmd_inject(args) -> int:
    trace = load_trace(args.trace)
    if args.perturb:
        plan = Perturb(args.perturb[0], args.perturb[1], args.seed)
    elif args.bursts:
        n, a, b = args.bursts
        plan = Bursts(n, a, b, args.seed)
    else:
        plan = Blank(args.blank, args.seed)
    sys.stdout.write(dumps_trace(inject(trace, plan)))
    return EXIT_OK


def cmd_compare(args) -> int:
    spec = _spec(args.spec)
    trace = load_trace(args.trace, spec)
    sys.stdout.write(compare(spec, trace, _config(args)).to_csv())
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = _spec(args.spec)
    sys.stdout.write(bench_csv(bench(spec, args.lengths, _config(args))))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symstream", description="Symbolic stream monitoring under uncertainty.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="monitor a trace and print verdict records")
    r.add_argument("spec")
    r.add_argument("trace")
    r.add_argument("--no-prune", action="store_true", help="keep all constraints (reference monitor)")
    r.add_argument("--lookback", type=int, default=0)
    r.add_argument("--abs", action="store_true", help="use the interval monitor instead")
    r.set_defaults(func=cmd_run)

    i = sub.add_parser("inject", help="add uncertainty to a trace")
    i.add_argument("trace")
    mode = i.add_mutually_exclusive_group(required=True)
    mode.add_argument("--perturb", nargs=2, type=float, metavar=("X", "Y"),
                      help="turn a fraction X of Real cells into ranges of relative width Y")
    mode.add_argument("--bursts", nargs=3, type=int, metavar=("N", "MIN", "MAX"),
                      help="N windows of unknowns with lengths in [MIN, MAX]")
    mode.add_argument("--blank", type=float, metavar="X", help="turn a fraction X of cells into unknowns")
    i.add_argument("--seed", type=int, default=0)
    i.set_defaults(func=cmd_inject)

    c = sub.add_parser("compare", help="symbolic versus interval monitor report (CSV)")
    c.add_argument("spec")
    c.add_argument("trace")
    c.add_argument("--no-prune", action="store_true")
    c.add_argument("--lookback", type=int, default=0)
    c.set_defaults(func=cmd_compare)

    b = sub.add_parser("bench", help="time per event and peak memory over unknown-input traces (CSV)")
    b.add_argument("spec")
    b.add_argument("--lengths", nargs="+", type=int, default=[100, 1000])
    b.add_argument("--no-prune", action="store_true")
    b.add_argument("--lookback", type=int, default=0)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, TraceError, ReadingError, FragmentError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (InvariantViolation, SolverResourceError) as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
