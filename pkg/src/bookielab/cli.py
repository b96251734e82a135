"""Command-line interface.

Subcommands:
  solve     — optimal price pairs for a config's distribution
  simulate  — one run per configured seed; trajectory CSV, summary JSON,
              and figures written under --out
  sweep     — run a multi-experiment config concurrently, aggregate regret
  regret    — recompute stochastic regret from a stored trajectory CSV
  roots     — first-order-condition root diagnostic table
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config, load_sweep
from .errors import BookieLabError
from .harness import (run_experiment, run_sweep, solve_benchmark,
                      read_trajectory_csv, write_summary_json,
                      write_trajectory_csv)
from .market import (Prices, count_foc_roots, expected_profit,
                     solve_optimal_prices)
from .report import render_run_figures, render_sweep_figure

__all__ = ["main"]


def _add_common(parser):
    parser.add_argument("--config", required=True, help="TOML or JSON config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config's seed list with one seed")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="json",
                        help="stdout format for tabular results")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bookielab",
        description="Binary betting-market simulator: Kelly bettors, "
                    "bookmaker pricing, online price-learning policies.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
            ("solve", "optimal prices for the config's distribution"),
            ("simulate", "run one experiment per configured seed"),
            ("sweep", "run a multi-experiment sweep"),
            ("regret", "recompute regret from a stored trajectory"),
            ("roots", "first-order-condition uniqueness diagnostic")):
        p = sub.add_parser(name, help=desc)
        _add_common(p)
        if name == "simulate":
            p.add_argument("--resolve", type=float, default=None,
                           help="settle realized cash flows with this true "
                                "event probability")
        if name == "regret":
            p.add_argument("--trajectory", required=True,
                           help="trajectory CSV written by simulate")
        if name == "sweep":
            p.add_argument("--parallelism", type=int, default=None)
    return parser


def _emit(rows, fmt, stream=None):
    stream = sys.stdout if stream is None else stream
    if fmt == "json":
        for row in rows:
            stream.write(json.dumps(row) + "\n")
    else:
        writer = csv.DictWriter(stream, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def _cmd_solve(args) -> int:
    cfg = load_config(args.config)
    dist = cfg.make_distribution()
    optima = solve_optimal_prices(dist, cfg.g)
    rows = [{"a": opt.prices.a, "b": opt.prices.b, "profit": opt.profit,
             "is_global": opt.is_global,
             "foc_residual": list(opt.foc_residual)} for opt in optima]
    if args.format == "csv":
        for row in rows:
            row["foc_residual"] = " ".join(repr(x) for x in row["foc_residual"])
    _emit(rows, args.format)
    return 0


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.resolve is not None:
        cfg = dataclasses.replace(cfg, resolve=args.resolve)
    seeds = [args.seed] if args.seed is not None else list(cfg.seeds)
    out = Path(args.out)
    rows = []
    for replica, seed in enumerate(seeds):
        result = run_experiment(cfg, seed=seed, replica=replica)
        tag = f"run_seed{seed}"
        write_trajectory_csv(out / f"{tag}.csv", result,
                             cadence=cfg.trajectory_cadence)
        write_summary_json(out / f"{tag}.json", result.summary)
        render_run_figures(out, result, prefix=tag)
        rows.append(dataclasses.asdict(result.summary))
    _emit(rows, args.format)
    return 0


def _cmd_sweep(args) -> int:
    cfgs = load_sweep(args.config)
    out = Path(args.out)
    rows, failures = run_sweep(cfgs, parallelism=args.parallelism,
                               out_csv=out / "sweep_summary.csv")
    if rows:
        render_sweep_figure(out, rows)
        _emit(rows, args.format)
    for failure in failures:
        print(f"FAILED config {failure['config_index']}: {failure['error']}",
              file=sys.stderr)
    return 0 if not failures else 1


def _cmd_regret(args) -> int:
    cfg = load_config(args.config)
    dist = cfg.make_distribution()
    stored = read_trajectory_csv(args.trajectory)
    benchmark = solve_benchmark(cfg)
    bench_rate = expected_profit(dist, cfg.g, benchmark) * cfg.wealth.mean
    regret = bench_rate * stored["t"][-1] - stored["cum_profit"][-1]
    _emit([{"t": int(stored["t"][-1]),
            "benchmark_a": benchmark.a, "benchmark_b": benchmark.b,
            "regret_stochastic": float(regret)}], args.format)
    return 0


def _cmd_roots(args) -> int:
    cfg = load_config(args.config)
    dist = cfg.make_distribution()
    n = count_foc_roots(dist, cfg.g)
    optima = solve_optimal_prices(dist, cfg.g, method="foc")
    best = optima[0]
    _emit([{"distribution": cfg.distribution.get("kind"), "g": cfg.g,
            "root_count": n, "a_star": best.prices.a, "b_star": best.prices.b,
            "profit": best.profit}], args.format)
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "regret": _cmd_regret,
    "roots": _cmd_roots,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (BookieLabError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
