"""Command-line interface: ``hyperkin {list,analyze,classify,verify,check-expr}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from typing import Sequence

from .. import __version__
from ..expr import ExprError, compile_expr, to_string
from .invariants import verify
from .report import build_report, emit_report, render
from .runner import RunOptions, run_grid
from .scenario_io import load_scenario
from .scenarios import builtin_scenarios, scenario_by_name

log = logging.getLogger("hyperkin")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _positive_float(s: str) -> float:
    try:
        x = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {s!r}")
    return x


def _grid(s: str) -> tuple[int, ...]:
    try:
        counts = tuple(int(c) for c in s.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be N or N,N,...: {s!r}") from None
    if not counts or any(c < 1 for c in counts):
        raise argparse.ArgumentTypeError(f"grid counts must be positive: {s!r}")
    return counts


def _global_flags(parser: argparse.ArgumentParser, default) -> None:
    g = parser.add_argument_group("global options")
    g.add_argument("--tol-affine", type=_positive_float, default=default, help="affine tolerance (default 1e-6)")
    g.add_argument("--tol-iso", type=_positive_float, default=default, help="isometric tolerance (default 1e-8)")
    g.add_argument("--tol-route", type=_positive_float, default=default, help="route agreement tolerance (default 1e-7)")
    g.add_argument("--fd-validate", action="store_true", default=default,
                   help="add finite-difference oracles in time")
    g.add_argument("-v", "--verbose", action="store_true", default=default)


def build_parser() -> argparse.ArgumentParser:
    # flags are accepted before or after the subcommand; the subcommand copy
    # only sets attributes that were actually given
    common = _Parser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)

    p = _Parser(prog="hyperkin", description="Kinematics and connection variation of moving hypersurfaces.")
    _global_flags(p, None)
    p.add_argument("--version", action="version", version=f"hyperkin {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    sub.add_parser("list", help="print the built-in scenario catalog", parents=[common])

    def scenario_args(sp):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--scenario", metavar="NAME", help="built-in scenario name")
        src.add_argument("--file", metavar="PATH", help="scenario file (hyperkin-scenario/1)")
        sp.add_argument("--t", type=float, default=None, help="evaluation time (default: scenario t0)")
        sp.add_argument("--grid", type=_grid, default=None, metavar="N[,N..]", help="points per axis")

    a = sub.add_parser("analyze", help="run the grid and write a report", parents=[common])
    scenario_args(a)
    a.add_argument("--out", metavar="PATH", help="output path (default: stdout)")
    a.add_argument("--format", choices=["json", "csv-summary"], default="json")

    c = sub.add_parser("classify", help="print the affine/isometric verdict", parents=[common])
    scenario_args(c)

    v = sub.add_parser("verify", help="run the invariant suite", parents=[common])
    scenario_args(v)

    e = sub.add_parser("check-expr", help="parse an expression and print its canonical form", parents=[common])
    e.add_argument("expr")
    e.add_argument("--vars", default="u,v,t", help="comma-separated allowed variables")
    return p


def _options(ns) -> RunOptions:
    kw = {}
    if ns.tol_affine is not None:
        kw["tol_affine"] = ns.tol_affine
    if ns.tol_iso is not None:
        kw["tol_iso"] = ns.tol_iso
    if ns.tol_route is not None:
        kw["tol_route"] = ns.tol_route
    if ns.fd_validate:
        kw["fd_validate"] = True
    return RunOptions(**kw)


def _scenario(ns):
    if ns.scenario is not None:
        try:
            s = scenario_by_name(ns.scenario)
        except KeyError as e:
            raise UsageError(e.args[0]) from None
    else:
        s = load_scenario(ns.file)
    if ns.grid is not None or ns.t is not None:
        s = s.with_grid(ns.grid, ns.t)
    return s


def _cmd_list(ns, out) -> int:
    for s in builtin_scenarios():
        amb = "euclidean" if s.motion.ambient.euclidean else s.motion.ambient.name
        print(f"{s.name:<26} m={s.motion.m}  ambient={amb:<20} {s.description}", file=out)
    return 0


def _cmd_analyze(ns, out) -> int:
    res = run_grid(_scenario(ns), _options(ns))
    report = build_report(res)
    if ns.out:
        emit_report(report, ns.format, ns.out)
        print(f"{res.scenario.name}: {res.verdict.line()}", file=sys.stderr)
    else:
        out.write(render(report, ns.format))
    return 0


def _cmd_classify(ns, out) -> int:
    res = run_grid(_scenario(ns), _options(ns))
    print(f"{res.scenario.name}: {res.verdict.line()}", file=out)
    return 0


def _cmd_verify(ns, out) -> int:
    res = run_grid(_scenario(ns), _options(ns))
    inv = verify(res)
    print(f"{res.scenario.name}: {res.n_points} points, {len(res.skipped)} skipped", file=out)
    for i in inv:
        print("  " + i.line(), file=out)
    failed = [i.name for i in inv if not i.passed]
    print(f"{'FAILED: ' + ', '.join(failed) if failed else 'all invariants within tolerance'}", file=out)
    return 1 if failed else 0


def _cmd_check_expr(ns, out) -> int:
    allowed = tuple(v.strip() for v in ns.vars.split(",") if v.strip())
    try:
        e = compile_expr(ns.expr, allowed, "expression")
    except ExprError as err:
        print(f"hyperkin: error: {err}", file=sys.stderr)
        return 2
    print(to_string(e), file=out)
    return 0


COMMANDS = {"list": _cmd_list, "analyze": _cmd_analyze, "classify": _cmd_classify,
            "verify": _cmd_verify, "check-expr": _cmd_check_expr}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        code = COMMANDS[ns.command](ns, out)
    except UsageError as e:
        print(f"hyperkin: error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError, ArithmeticError) as e:
        print(f"hyperkin: error: {e}", file=sys.stderr)
        return 1
    log.debug("%s finished in %.2fs", ns.command, time.perf_counter() - t0)
    return code


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
