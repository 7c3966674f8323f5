"""Command-line entry point: ``exitbounds <subcommand> ...``.

Exit status: 0 success, 1 usage error, 2 numerical non-convergence,
3 a violated asserted invariant. Output is a pure function of the arguments
(fixed default seeds, no timestamps), so repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import bounds, harness
from .domains import (
    SPEC_GRAMMAR,
    format_spec,
    lambda1_exact,
    moment_exit_center,
    parse_spec,
)
from .errors import (
    BracketError,
    ConvergenceError,
    DomainError,
    InvariantViolation,
    NotAvailableError,
    RunawayError,
)
from .reports import Report
from .simulate import DEFAULT_SEED, estimate_moment, fd_eigen

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _floats(text):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _ints(text):
    try:
        return [int(float(t)) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def _spec(text):
    try:
        return parse_spec(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc))


# ---------------------------------------------------------------- commands

def cmd_bounds(args):
    rep = bounds.bound_report(args.d, args.p).as_dict()
    a_ref, eps_ref = bounds.C1_REFERENCE_POINT
    rep["c1_objective_at_reference"] = bounds.c1_objective(args.d, args.p, a_ref, eps_ref)
    rep["reference_a"], rep["reference_eps"] = a_ref, eps_ref
    rep["reference_value"] = bounds.C1_REFERENCE_VALUE
    return Report("bounds", [rep], {"command": "bounds"}), False


def cmd_domain(args):
    spec, p = args.spec, args.p
    lam = lambda1_exact(spec)
    moment = moment_exit_center(spec, p)
    row = {"spec": format_spec(spec), "p": p, "lambda1_kind": lam.kind}
    if lam.kind == "interval":
        lo, hi = lam.interval
        row.update(lambda1=None, lambda1_lo=lo, lambda1_hi=hi, moment_center=moment,
                   G=None, G_lo=lo ** p * moment, G_hi=hi ** p * moment)
    else:
        row.update(lambda1=lam.value, moment_center=moment, G=lam.value ** p * moment)
    row["lower_bound"] = bounds.lower_bound(p)
    if p == 1:
        row["payne_floor"] = math.pi ** 2 / 4.0
    return Report("domain", [row], {"command": "domain"}), False


def cmd_mc(args):
    est = estimate_moment(args.spec, args.start, args.p, args.n, args.step, args.seed, args.threads)
    row = {"spec": format_spec(args.spec), **est.as_dict()}
    try:
        row["exact"] = moment_exit_center(args.spec, args.p) if args.start is None else None
    except NotAvailableError:
        row["exact"] = None
    return Report("mc", [row], {"command": "mc"}), False


def cmd_eigen(args):
    spec = args.spec
    h = args.h if args.h is not None else spec.inradius / 40.0
    res = fd_eigen(spec, h)
    row = {"spec": format_spec(spec), **res.as_dict()}
    try:
        ex = lambda1_exact(spec)
        row["exact"] = None if ex.kind == "interval" else ex.value
        if ex.kind == "interval":
            row["exact_lo"], row["exact_hi"] = ex.interval
    except NotAvailableError:
        row["exact"] = None
    return Report("eigen", [row], {"command": "eigen"}), False


def _sweep_report(name, rows, meta=None):
    meta = {"command": f"sweep {name}", **(meta or {})}
    failed = any(r.asserted and r.verdict == harness.VIOLATED for r in rows)
    return Report(f"sweep-{name}", [r.as_record() for r in rows], meta), failed


def cmd_sweep(args):
    which = args.which
    if which == "rectangles":
        return _sweep_report(which, harness.rectangle_sweep(args.a_list, args.p))
    if which == "triangles":
        return _sweep_report(which, harness.triangle_sweep(h_div=args.h_div, threads=args.threads),
                             {"h_div": args.h_div})
    if which == "ellipses":
        return _sweep_report(which, harness.ellipse_check(h_div=args.h_div, threads=args.threads),
                             {"h_div": args.h_div})
    if which == "ordering":
        return _sweep_report(which, harness.ordering_chain())
    if which == "moments":
        rows = harness.moment_inequality_check(args.spec, args.k_max, args.p_grid, args.n,
                                               args.seed, args.step, args.threads)
        return _sweep_report(which, rows, {"seed": args.seed})
    if which == "symmetrization":
        rows = harness.symmetrization_check(args.spec, args.t_list, args.n, args.seed,
                                            args.grid, args.step, args.threads)
        return _sweep_report(which, rows, {"seed": args.seed})
    if which == "survival":
        rows = harness.survival_bound_check(args.eps_list, args.t_list, args.n, args.seed,
                                            args.step, args.threads)
        return _sweep_report(which, rows, {"seed": args.seed})
    raise UsageError(f"unknown sweep {which!r}")


def cmd_asymptotics(args):
    rows = harness.bound_table(args.d_list, args.p)
    return Report("asymptotics", rows, {"command": "asymptotics"}), False


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("table", "csv", "json"), default="table")
    common.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $EXITBOUNDS_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    mc_opts = argparse.ArgumentParser(add_help=False)
    mc_opts.add_argument("--n", type=int, default=100_000)
    mc_opts.add_argument("--step", type=float, default=None, help="time step (default (inradius/50)^2)")
    mc_opts.add_argument("--seed", type=int, default=DEFAULT_SEED)

    parser = _Parser(prog="exitbounds", description=__doc__.splitlines()[0],
                     epilog=SPEC_GRAMMAR, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bounds", parents=[common], help="universal bound constants for (d, p)")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--p", type=float, default=1.0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("domain", parents=[common], help="exact lambda_1, centre moment and G")
    p.add_argument("--spec", type=_spec, default=parse_spec("ball d=2 r=1"))
    p.add_argument("--p", type=float, default=1.0)
    p.set_defaults(func=cmd_domain)

    p = sub.add_parser("mc", parents=[common, mc_opts], help="Monte Carlo estimate of E_x[tau^p]")
    p.add_argument("--spec", type=_spec, default=parse_spec("ball d=2 r=1"))
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--start", type=_floats, default=None, help="start point, e.g. 0.2,0.1")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("eigen", parents=[common], help="finite-difference lambda_1 of a planar domain")
    p.add_argument("--spec", type=_spec, default=parse_spec("ball d=2 r=1"))
    p.add_argument("--h", type=float, default=None, help="coarse spacing (default inradius/40)")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("sweep", parents=[common, mc_opts], help="conjecture and inequality sweeps")
    p.add_argument("which", choices=("rectangles", "triangles", "ellipses", "ordering", "moments",
                                     "symmetrization", "survival"))
    p.add_argument("--p", type=float, default=1.0, help="moment order (rectangles)")
    p.add_argument("--a-list", type=_floats, default=list(harness.RECTANGLE_GRID))
    p.add_argument("--h-div", type=float, default=None,
                   help="mesh spacing is inradius/h_div (triangles 24, ellipses 30)")
    p.add_argument("--spec", type=_spec, default=parse_spec("ball d=2 r=1"))
    p.add_argument("--k-max", type=int, default=3)
    p.add_argument("--p-grid", type=_floats, default=[1.5])
    p.add_argument("--t-list", type=_floats, default=None)
    p.add_argument("--eps-list", type=_floats, default=[0.2, 0.5, 0.9])
    p.add_argument("--grid", type=int, default=3, help="interior grid points per axis")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("asymptotics", parents=[common], help="bounds divided by d^p for growing d")
    p.add_argument("--p", type=_floats, default=[1.0, 2.0])
    p.add_argument("--d-list", type=_ints, default=[100, 10_000, 1_000_000])
    p.set_defaults(func=cmd_asymptotics)
    return parser


def _fill_defaults(args):
    if args.command == "sweep":
        if args.h_div is None:
            args.h_div = 24.0 if args.which == "triangles" else 30.0
        if args.t_list is None:
            args.t_list = [0.5, 1.0, 2.0, 4.0] if args.which == "survival" else [0.5, 1.0, 2.0]
    if getattr(args, "threads", None) is not None and args.threads < 1:
        raise UsageError("--threads must be >= 1")


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _fill_defaults(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report, failed = args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConvergenceError, BracketError, RunawayError) as exc:
        diag = getattr(exc, "diagnostics", None)
        print(f"numerical failure: {exc}" + (f" {diag}" if diag else ""), file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, DomainError, NotAvailableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = report.render(args.output)
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    if failed:
        print("invariant violated: an asserted inequality failed beyond tolerance", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def main():
    sys.exit(run())
