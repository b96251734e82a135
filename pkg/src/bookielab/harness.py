"""End-to-end experiment driver: bettor stream, policy loop, replication,
and trajectory/summary persistence.

One run is one strictly sequential loop over arriving bettors (order is
semantically meaningful); sweeps parallelise across runs with independent,
non-overlapping seed streams derived from (master seed, replica index).
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .agents import BettorDraw, Side, kelly_bet
from .config import ExperimentConfig, config_digest, SCHEMA_VERSION
from .errors import BookieLabError, SolverError
from .market import Prices, ProfitCurves, expected_profit, \
    solve_fair_optimal, solve_optimal_prices
from .metrics import Trajectory, stochastic_regret, adversarial_regret
from .policies import (BetObservation, FixedPolicy, FtlPolicy, LmsrPolicy,
                       RiskBalancePolicy, SaPolicy, estimate_belief)

__all__ = ["RunSummary", "RunResult", "run_experiment", "run_sweep",
           "realized_cash_flow", "write_trajectory_csv", "read_trajectory_csv",
           "write_summary_json", "trajectory_checkpoints"]


@dataclass
class RunSummary:
    schema_version: int
    config_digest: str
    seed: int
    replica: int
    horizon: int
    policy_kind: str
    final_a: float
    final_b: float
    benchmark_a: float
    benchmark_b: float
    benchmark_profit_rate: float   # u(a*, b*) * E[w], per bettor
    achieved_profit: float
    regret_stochastic: float
    regret_adversarial: float
    clamp_count: int
    payin_total: float
    payout_if_r: float
    payout_if_l: float
    outcome_r: bool | None
    realized_cash: float | None
    walltime_s: float


@dataclass
class RunResult:
    summary: RunSummary
    trajectory: Trajectory
    regret_series: np.ndarray  # cumulative stochastic regret, one per bettor


_BENCHMARK_CACHE: dict = {}


def solve_benchmark(cfg: ExperimentConfig) -> Prices:
    """Benchmark prices for the config's mode, cached per (distribution, g)."""
    mode = cfg.benchmark.get("mode", "global")
    if mode == "custom":
        return Prices(float(cfg.benchmark["a"]), float(cfg.benchmark["b"]))
    key = (json.dumps(cfg.distribution, sort_keys=True), cfg.g, mode)
    if key not in _BENCHMARK_CACHE:
        dist = cfg.make_distribution()
        try:
            if mode == "fair_global":
                a = solve_fair_optimal(dist.mean(), cfg.g)
                _BENCHMARK_CACHE[key] = Prices(a, 1.0 - a)
            else:
                best = solve_optimal_prices(dist, cfg.g)[0]
                _BENCHMARK_CACHE[key] = best.prices
        except BookieLabError:
            raise
        except Exception as exc:
            raise SolverError(f"benchmark solve failed: {exc}") from exc
    return _BENCHMARK_CACHE[key]


def _build_policy(cfg: ExperimentConfig):
    kind = cfg.policy["kind"]
    params = dict(cfg.policy.get("params", {}))
    g = cfg.g
    if kind == "fixed":
        a = params.get("a", g)
        b = params.get("b", 1.0 - g)
        return FixedPolicy(Prices(a, b))
    if kind == "sa":
        return SaPolicy(g,
                        a0=params.get("a0", 0.5 * (g + 1.0)),
                        b0=params.get("b0", 0.5 * (2.0 - g)),
                        gamma=params.get("gamma", 300.0),
                        m=params.get("m", 5000.0),
                        per_side_counters=params.get("per_side_counters", False))
    if kind == "ftl":
        return FtlPolicy(g, a0=params.get("a0"), tau=params.get("tau", 0.01))
    if kind == "risk_balance":
        return RiskBalancePolicy(a0=params.get("a0", 0.5),
                                 b0=params.get("b0", 0.5),
                                 gamma=params.get("gamma", 300.0),
                                 m=params.get("m", 5000.0))
    if kind == "lmsr":
        liquidity = params.get("liquidity", 100.0 * cfg.wealth.mean)
        return LmsrPolicy(liquidity)
    raise AssertionError(f"unreachable policy kind {kind!r}")


def run_experiment(cfg: ExperimentConfig, seed: int | None = None,
                   replica: int = 0) -> RunResult:
    """One deterministic run: sample bettors, drive the policy, account.

    `seed` defaults to the first entry of cfg.seeds; the random stream is
    derived from (seed, replica) so replicas never overlap.
    """
    t0 = time.perf_counter()
    master = int(cfg.seeds[0] if seed is None else seed)
    rng = np.random.default_rng(np.random.SeedSequence([master, replica]))
    dist = cfg.make_distribution()
    g = cfg.g
    T = cfg.horizon

    p_true = np.asarray(dist.sample(rng, T), dtype=float)
    wealth = np.asarray(cfg.wealth.sample(rng, T), dtype=float)
    oracle_w = cfg.wealth.mean

    benchmark = solve_benchmark(cfg)
    policy = _build_policy(cfg)
    is_lmsr = isinstance(policy, LmsrPolicy)

    a_arr = np.empty(T)
    b_arr = np.empty(T)
    side_arr = np.empty(T, dtype="U1")
    stake_arr = np.empty(T)
    p_hat_arr = np.full(T, math.nan)

    for t in range(T):
        prices = policy.quote()
        a_arr[t] = prices.a
        b_arr[t] = prices.b
        draw = BettorDraw(p_true[t], wealth[t])
        if is_lmsr:
            side, cost, _shares = policy.trade(draw)
            side_arr[t] = side.value
            stake_arr[t] = cost
            if side is not Side.NO_BET:
                p_hat_arr[t] = policy.quote().a  # post-trade quote
        else:
            outcome = kelly_bet(draw, prices)
            side_arr[t] = outcome.side.value
            stake_arr[t] = outcome.stake
            w_hat = oracle_w if cfg.wealth_estimate == "oracle" else wealth[t]
            obs = BetObservation(outcome.side, outcome.stake, w_hat)
            if outcome.side is not Side.NO_BET:
                p_hat_arr[t] = estimate_belief(prices, obs)
            policy.observe(obs)

    curves = ProfitCurves(dist, g)
    step_profit = np.asarray(curves.u(a_arr, b_arr), dtype=float) * oracle_w
    traj = Trajectory(t=np.arange(1, T + 1), a=a_arr, b=b_arr, side=side_arr,
                      stake=stake_arr, wealth=wealth, p_true=p_true,
                      p_hat=p_hat_arr, step_profit=step_profit)

    regret_series = stochastic_regret(traj, dist, g, benchmark, oracle_w)
    adv = adversarial_regret(traj, g)

    for_r = side_arr == Side.FOR_R.value
    for_l = side_arr == Side.FOR_L.value
    payin = float(np.sum(stake_arr))
    if is_lmsr:
        # share payouts live in the cost-function state, not in stakes
        payout_r = float(policy.s_r)
        payout_l = float(policy.s_l)
    else:
        payout_r = float(np.sum(stake_arr[for_r] / a_arr[for_r]))
        payout_l = float(np.sum(stake_arr[for_l] / b_arr[for_l]))

    outcome_r = None
    realized_cash = None
    if cfg.resolve is not None:
        outcome_r = bool(rng.random() < cfg.resolve)
        realized_cash = payin - (payout_r if outcome_r else payout_l)

    final = policy.quote()
    summary = RunSummary(
        schema_version=SCHEMA_VERSION,
        config_digest=config_digest(cfg),
        seed=master,
        replica=replica,
        horizon=T,
        policy_kind=cfg.policy["kind"],
        final_a=final.a,
        final_b=final.b,
        benchmark_a=benchmark.a,
        benchmark_b=benchmark.b,
        benchmark_profit_rate=expected_profit(dist, g, benchmark) * oracle_w,
        achieved_profit=float(np.sum(step_profit)),
        regret_stochastic=float(regret_series[-1]),
        regret_adversarial=float(adv),
        clamp_count=int(getattr(policy, "clamp_count", 0)),
        payin_total=payin,
        payout_if_r=payout_r,
        payout_if_l=payout_l,
        outcome_r=outcome_r,
        realized_cash=realized_cash,
        walltime_s=time.perf_counter() - t0,
    )
    return RunResult(summary, traj, regret_series)


def realized_cash_flow(traj: Trajectory, r_occurred: bool) -> float:
    """Sum of payins minus payouts to winners, recomputed from a trajectory."""
    for_r = traj.side == Side.FOR_R.value
    for_l = traj.side == Side.FOR_L.value
    payin = float(np.sum(traj.stake))
    if r_occurred:
        payout = float(np.sum(traj.stake[for_r] / traj.a[for_r]))
    else:
        payout = float(np.sum(traj.stake[for_l] / traj.b[for_l]))
    return payin - payout


def trajectory_checkpoints(horizon: int, cadence: str = "auto") -> np.ndarray:
    """Persisted row indices: every step up to 1e3, then every 1e3 steps."""
    if cadence == "full":
        return np.arange(1, horizon + 1)
    head = np.arange(1, min(horizon, 1000) + 1)
    tail = np.arange(2000, horizon + 1, 1000)
    ts = np.concatenate([head, tail])
    if ts[-1] != horizon:
        ts = np.append(ts, horizon)
    return ts


def write_trajectory_csv(path, result: RunResult,
                         cadence: str | None = None) -> None:
    """Persist a trajectory with the fixed column schema; floats keep full
    precision so replay reproduces in-run values bitwise."""
    traj = result.trajectory
    s = result.summary
    ts = trajectory_checkpoints(s.horizon, cadence or "auto")
    cum = np.cumsum(traj.step_profit)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version={s.schema_version} seed={s.seed} "
                 f"replica={s.replica} config={s.config_digest}\n")
        writer = csv.writer(fh)
        writer.writerow(("t", "a", "b", "side", "stake", "p_hat",
                         "step_profit", "cum_profit", "regret_stoch"))
        for t in ts:
            i = int(t) - 1
            writer.writerow((int(t), repr(float(traj.a[i])),
                             repr(float(traj.b[i])), traj.side[i],
                             repr(float(traj.stake[i])),
                             repr(float(traj.p_hat[i])),
                             repr(float(traj.step_profit[i])),
                             repr(float(cum[i])),
                             repr(float(result.regret_series[i]))))


def read_trajectory_csv(path) -> dict:
    """Load a persisted trajectory into column arrays."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# schema_version="):
            raise ValueError(f"{path}: missing schema-version header")
        reader = csv.DictReader(fh)
        rows = list(reader)
    out = {"t": np.array([int(r["t"]) for r in rows])}
    for col in ("a", "b", "stake", "p_hat", "step_profit", "cum_profit",
                "regret_stoch"):
        out[col] = np.array([float(r[col]) for r in rows])
    out["side"] = np.array([r["side"] for r in rows], dtype="U1")
    return out


def write_summary_json(path, summary: RunSummary) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(asdict(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _max_workers(requested: int | None) -> int:
    cap = os.environ.get("BOOKIE_LAB_THREADS")
    cap = int(cap) if cap else (os.cpu_count() or 1)
    if requested is not None:
        cap = min(cap, requested)
    return max(cap, 1)


def _sweep_worker(args):
    cfg, seed, replica = args
    result = run_experiment(cfg, seed=seed, replica=replica)
    return asdict(result.summary)


def run_sweep(cfgs, parallelism: int | None = None,
              out_csv=None) -> tuple[list[dict], list[dict]]:
    """Run every (config, seed) replica, aggregate regret per config.

    Returns (aggregate rows, failures); a failed config is reported, not
    fatal.  Aggregates include the benchmark prices so parameter sweeps can
    read off the optimum per setting.
    """
    if not cfgs:
        raise ValueError("sweep needs at least one config")
    jobs = []
    for ci, cfg in enumerate(cfgs):
        for ri, seed in enumerate(cfg.seeds):
            jobs.append((ci, (cfg, seed, ri)))

    summaries: dict[int, list[dict]] = {ci: [] for ci in range(len(cfgs))}
    failures: list[dict] = []
    workers = _max_workers(parallelism)
    if workers == 1 or len(jobs) == 1:
        results = []
        for ci, job in jobs:
            try:
                results.append((ci, _sweep_worker(job)))
            except Exception as exc:
                failures.append({"config_index": ci, "error": str(exc)})
        for ci, s in results:
            summaries[ci].append(s)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_sweep_worker, job): ci for ci, job in jobs}
            for fut in as_completed(futs):
                ci = futs[fut]
                try:
                    summaries[ci].append(fut.result())
                except Exception as exc:
                    failures.append({"config_index": ci, "error": str(exc)})

    rows = []
    for ci, cfg in enumerate(cfgs):
        runs = summaries[ci]
        if not runs:
            continue
        regrets = [r["regret_stochastic"] for r in runs]
        rows.append({
            "config_index": ci,
            "config_digest": runs[0]["config_digest"],
            "policy_kind": runs[0]["policy_kind"],
            "distribution_kind": cfg.distribution.get("kind"),
            "n_runs": len(runs),
            "benchmark_a": runs[0]["benchmark_a"],
            "benchmark_b": runs[0]["benchmark_b"],
            "regret_mean": float(np.mean(regrets)),
            "regret_min": float(np.min(regrets)),
            "regret_max": float(np.max(regrets)),
        })
    if out_csv is not None and rows:
        out_csv = Path(out_csv)
        out_csv.parent.mkdir(parents=True, exist_ok=True)
        with open(out_csv, "w", newline="") as fh:
            fh.write(f"# schema_version={SCHEMA_VERSION}\n")
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return rows, failures
