"""Command line entry point: ``s2oct {run,validate,plot,oracle-check}``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .core import build_topology
from .experiment import ExperimentConfig, random_tiny_instance, read_csv_rows, run_experiment, validate_run
from .model import ModelParams, SolveStatus, build_s2oct
from .oracle import enumerate_optimum
from .plotting import plot_all
from .solve import SolverConfig, solve

log = logging.getLogger("s2oct")

ORACLE_TOL = 1e-5


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    solver = cfg.solver
    overrides = {}
    if getattr(args, "time_limit", None) is not None:
        overrides["time_limit_seconds"] = args.time_limit
    if getattr(args, "solver_command", None):
        overrides.update(command=args.solver_command, solver_id="command")
    if getattr(args, "backend", None):
        overrides["solver_id"] = args.backend
    if getattr(args, "emphasis", None):
        overrides["emphasis"] = args.emphasis
    if getattr(args, "mip_gap", None) is not None:
        overrides["mip_gap"] = args.mip_gap
    if overrides:
        solver = dataclasses.replace(solver, **overrides)
    changes = dict(solver=solver)
    for key in ("workers", "C", "s", "depth"):
        val = getattr(args, key, None)
        if val is not None:
            changes[key] = val
    return dataclasses.replace(cfg, **changes)


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = Path(args.output_dir)
    t0 = time.perf_counter()
    results, diffs = run_experiment(cfg, out)
    plot_all(results, diffs, cfg.solver.time_limit_seconds, out / "plots")
    errors = sum(r.get("status") == SolveStatus.ERROR.value for r in results)
    print(f"{len(results)} result rows, {len(diffs)} diff rows, {errors} errors "
          f"in {time.perf_counter() - t0:.1f}s -> {out}")
    return 1 if errors else 0


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    reports = validate_run(cfg, args.output_dir)
    bad = [r for r in reports if not r["ok"]]
    for r in reports:
        flag = "ok  " if r["ok"] else "FAIL"
        print(f"{flag} {r['instance']} {r['design']} r{r['replicate']} {r['method']}")
        for msg in r["mismatches"]:
            print(f"     {msg}")
    print(f"{len(reports) - len(bad)}/{len(reports)} solutions consistent")
    return 1 if bad else 0


def cmd_plot(args) -> int:
    out = Path(args.output_dir)
    limit = args.time_limit
    if limit is None:
        limit = ExperimentConfig.from_file(args.config).solver.time_limit_seconds if args.config else 7200.0
    results = read_csv_rows(out / "results.csv")
    diffs = read_csv_rows(out / "diffs.csv")
    for path in plot_all(results, diffs, limit, out / "plots"):
        print(path)
    return 0


def cmd_oracle_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    cfg = SolverConfig(time_limit_seconds=args.time_limit, mip_gap=0.0)
    topology = build_topology(args.depth)
    failures = 0
    for k in range(args.count):
        ds, lam = random_tiny_instance(rng, args.max_n, args.max_m)
        params = ModelParams.for_dataset(ds, depth=args.depth, lam=lam)
        ref = enumerate_optimum(ds, topology, params)
        rep = solve(build_s2oct(ds, topology, params), cfg)
        if rep.status is SolveStatus.OPTIMAL:
            ok = abs(rep.objective - ref.objective) <= ORACLE_TOL
        else:
            ok = False
        failures += not ok
        print(f"{'ok  ' if ok else 'FAIL'} #{k} n={ds.n} m={ds.m} lambda={lam} "
              f"oracle={ref.objective:.6f} milp={rep.objective:.6f} ({rep.status.value})")
    print(f"{args.count - failures}/{args.count} instances agree")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="s2oct", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--time-limit", type=float, help="seconds per solve")
        p.add_argument("--solver-command", help="external solver command template")
        p.add_argument("--backend", choices=["highs", "command"])
        p.add_argument("--emphasis", choices=["balanced", "feasibility"])
        p.add_argument("--mip-gap", type=float)

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("config")
    p.add_argument("-o", "--output-dir", default="s2oct-out")
    p.add_argument("-j", "--workers", type=int)
    p.add_argument("--C", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--depth", type=int)
    solver_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="re-route points through stored trees and compare")
    p.add_argument("config")
    p.add_argument("-o", "--output-dir", default="s2oct-out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="redraw figures from results.csv and diffs.csv")
    p.add_argument("-o", "--output-dir", default="s2oct-out")
    p.add_argument("--config")
    p.add_argument("--time-limit", type=float)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("oracle-check", help="compare MILP optima with brute-force enumeration")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--max-m", type=int, default=4)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.set_defaults(func=cmd_oracle_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
