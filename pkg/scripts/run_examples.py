#!/usr/bin/env python3
"""Run every built-in scenario (and any scenario files given) and write reports.

    python scripts/run_examples.py [--out reports] [--grid N] [--fd-validate] [FILE.yaml ...]

Writes <name>.json and <name>.csv per scenario and prints one verdict line each.
"""

import argparse
import sys
import time
from pathlib import Path

from hyperkin.app.report import build_report, emit_report
from hyperkin.app.runner import RunOptions, run_grid
from hyperkin.app.scenario_io import load_scenario
from hyperkin.app.scenarios import builtin_scenarios


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("files", nargs="*", type=Path)
    p.add_argument("--out", type=Path, default=Path("reports"))
    p.add_argument("--grid", type=int, default=None, help="points per axis (default: scenario grid)")
    p.add_argument("--fd-validate", action="store_true")
    args = p.parse_args(argv)

    scenarios = builtin_scenarios() + [load_scenario(f) for f in args.files]
    args.out.mkdir(parents=True, exist_ok=True)
    opts = RunOptions(fd_validate=args.fd_validate)
    for sc in scenarios:
        if args.grid:
            sc = sc.with_grid([args.grid])
        t0 = time.perf_counter()
        res = run_grid(sc, opts)
        rep = build_report(res)
        emit_report(rep, "json", args.out / f"{sc.name}.json")
        emit_report(rep, "csv-summary", args.out / f"{sc.name}.csv")
        agg = rep["aggregates"]
        print(f"{sc.name:<26} {res.verdict.line()}  routes={agg['sup_route_residual']:.1e}  "
              f"[{time.perf_counter() - t0:.2f}s]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
