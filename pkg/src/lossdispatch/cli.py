"""Command-line driver.

Exit codes: 0 success, 1 input error, 2 solver failure, 3 a check failed.
The log level is read from ``LOSSDISPATCH_LOG_LEVEL`` (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import checks
from .dispatch import InfeasibleProblem, LimitSource, assemble, ldf_allocation, relax_oversatisfaction, solve_dispatch
from .injections import HalfLine
from .line_functions import ApproxTier
from .line_limits import LimitOutOfRange
from .matpower import CaseFormatError, load_case, raw_to_json, serialize_case, to_network
from .network import NetworkError
from .nlp import SolverError, SolverOptions
from .report import TierSpec, compare_tiers, solution_csv, solution_table, solution_to_dict

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_CHECK = 0, 1, 2, 3
LOG_ENV = "LOSSDISPATCH_LOG_LEVEL"

log = logging.getLogger("lossdispatch")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not the solver-failure code argparse uses
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_ldf(value: str) -> int | None:
    """``slack`` or ``slack=<bus>``; returns the bus id or None for the case slack."""
    if value == "slack":
        return None
    key, sep, bus = value.partition("=")
    if key != "slack" or not sep:
        raise argparse.ArgumentTypeError(f"expected slack or slack=<bus>, got {value!r}")
    try:
        return int(bus)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bus id must be an integer, got {bus!r}") from None


_NO_LDF = object()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lossdispatch", description="Economic dispatch with marginal losses.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("case", help="case file (.m or .json mirror)")
        p.add_argument("--reference", type=int, default=None, help="reference bus id (default: case slack)")
        p.add_argument("--tol", type=float, default=1e-8, help="KKT tolerance")
        p.add_argument("--max-iter", type=int, default=200)
        p.add_argument("--limits", choices=[s.value for s in LimitSource], default="current",
                       help="how MVA ratings are read (default: current magnitude)")
        p.add_argument("--relax", action="store_true", help="allow load over-satisfaction")
        p.add_argument("--out", default=None, help="write output here instead of stdout")

    tiers = [t.value for t in ApproxTier]
    p = sub.add_parser("solve", help="solve one dispatch problem")
    common(p)
    p.add_argument("--tier", choices=tiers, default="exact")
    p.add_argument("--ldf", type=parse_ldf, default=_NO_LDF, metavar="slack[=BUS]",
                   help="allocate all losses to one bus instead of half per line end")
    p.add_argument("--format", choices=["json", "table", "csv"], default="table")

    p = sub.add_parser("compare", help="compare approximation tiers against the exact tier")
    common(p)
    p.add_argument("--tiers", nargs="+", choices=tiers, default=tiers)
    p.add_argument("--ldf", type=parse_ldf, default=_NO_LDF, metavar="slack[=BUS]",
                   help="add a DC row with all losses at one bus")
    p.add_argument("--repeat", type=int, default=1, help="average wall time over this many solves")
    p.add_argument("--jobs", type=int, default=1, help="solve tiers on this many threads")
    p.add_argument("--epsilon", type=float, default=1e-6, help="p.u. threshold for counting dispatched buses")
    p.add_argument("--format", choices=["csv", "json", "table"], default="table")

    p = sub.add_parser("check", help="run the invariant and derivative suite")
    p.add_argument("case")
    p.add_argument("--tier", choices=tiers, default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--no-solve", action="store_true", help="skip the checks that need a dispatch solve")
    p.add_argument("--out", default=None)

    p = sub.add_parser("convert", help="convert between .m and .json case formats")
    p.add_argument("case")
    p.add_argument("output", help="output path; format from the extension unless --format is given")
    p.add_argument("--format", choices=["m", "json"], default=None)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _load(path: str):
    try:
        raw = load_case(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    return raw


def _options(args) -> SolverOptions:
    return SolverOptions(tol_kkt=args.tol, max_iter=args.max_iter)


def cmd_solve(args) -> int:
    net = to_network(_load(args.case))
    alloc = HalfLine() if args.ldf is _NO_LDF else ldf_allocation(net, args.ldf)
    problem = assemble(net, args.tier, args.limits, args.reference, alloc)
    if args.relax:
        problem = relax_oversatisfaction(problem)
    sol = solve_dispatch(problem, options=_options(args))
    if args.format == "json":
        text = json.dumps(solution_to_dict(sol), indent=2)
    elif args.format == "csv":
        text = solution_csv(sol)
    else:
        text = solution_table(sol)
    _emit(text, args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    net = to_network(_load(args.case))
    specs = [TierSpec(ApproxTier.parse(t)) for t in args.tiers]
    if args.ldf is not _NO_LDF:
        slack = args.ldf if args.ldf is not None else net.slack_bus
        specs.append(TierSpec(ApproxTier.DC, ldf_slack=slack if slack is not None else net.buses[0].id))
    report = compare_tiers(
        net,
        specs,
        limits=args.limits,
        reference=args.reference,
        relaxed=args.relax,
        options=_options(args),
        repeat=args.repeat,
        jobs=args.jobs,
        dispatch_epsilon=args.epsilon,
    )
    text = {"csv": report.to_csv, "json": report.to_json, "table": report.to_table}[args.format]()
    _emit(text, args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    net = to_network(_load(args.case))
    results = checks.run_all(net, args.tier, seed=args.seed, options=SolverOptions(tol_kkt=args.tol),
                             solve=not args.no_solve)
    _emit("\n".join(r.line() for r in results), args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def cmd_convert(args) -> int:
    raw = _load(args.case)
    fmt = args.format or ("json" if args.output.endswith(".json") else "m")
    text = raw_to_json(raw) if fmt == "json" else serialize_case(raw)
    _emit(text, args.output)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "compare": cmd_compare, "check": cmd_check, "convert": cmd_convert}


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, CaseFormatError, NetworkError, InfeasibleProblem, LimitOutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
