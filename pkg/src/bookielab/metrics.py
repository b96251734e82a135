"""Regret computation and trajectory bookkeeping.

Stochastic regret compares expected profit streams: T u(a, b) E[w] for the
fixed benchmark prices minus the sum of u(a_t, b_t) E[w] along the quoted
trajectory.  Adversarial regret replaces expectations over beliefs with the
realized (p_t, w_t) draws and takes a hindsight maximum over fixed prices
with non-negative overround.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beliefs import BeliefDistribution
from .errors import DegenerateSeriesError
from .market import Prices, expected_profit

__all__ = [
    "Trajectory",
    "stochastic_regret",
    "adversarial_regret",
    "adversarial_regret_series",
    "regret_rate_fit",
    "realized_profit_terms",
    "CSV_COLUMNS",
]


def realized_profit_terms(p, w, a, b, g: float) -> np.ndarray:
    """Per-bettor expected profit at prices (a, b) given realized (p, w):
    w (p-a)+ (a-g)/(a(1-a)) + w (q-b)+ (b-(1-g))/(b(1-b)), q = 1 - p."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    term_r = w * np.maximum(p - a, 0.0) * (a - g) / (a * (1.0 - a))
    term_l = (w * np.maximum((1.0 - p) - b, 0.0)
              * (b - (1.0 - g)) / (b * (1.0 - b)))
    return term_r + term_l

CSV_COLUMNS = ("t", "a", "b", "side", "stake", "p_hat",
               "step_profit", "cum_profit", "regret_stoch")


@dataclass
class Trajectory:
    """Per-bettor records of one run; one entry per arrival, no-bets included.

    step_profit is the per-step expected profit u(a_t, b_t) * E[w] under the
    bookmaker's belief; p_true and wealth are simulator-only information used
    by the adversarial accounting.
    """

    t: np.ndarray          # 1..T, strictly increasing
    a: np.ndarray
    b: np.ndarray
    side: np.ndarray       # "R" | "L" | "-"
    stake: np.ndarray
    wealth: np.ndarray
    p_true: np.ndarray
    p_hat: np.ndarray      # NaN on no-bet arrivals
    step_profit: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in ("a", "b", "side", "stake", "wealth", "p_true",
                     "p_hat", "step_profit"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"field {name} length mismatch with t ({n})")
        if n and not np.all(np.diff(self.t) > 0):
            raise ValueError("t must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)


def stochastic_regret(traj: Trajectory, dist: BeliefDistribution, g: float,
                      benchmark: Prices, wealth_mean: float = 1.0) -> np.ndarray:
    """Cumulative regret series against a fixed benchmark price pair."""
    bench_rate = expected_profit(dist, g, benchmark) * wealth_mean
    return bench_rate * np.arange(1, len(traj) + 1) - np.cumsum(traj.step_profit)


def _hindsight_best(p: np.ndarray, w: np.ndarray, g: float,
                    grid_step: float = 1e-3) -> float:
    """max over fixed (a, b), a + b >= 1, of the realized-expectation profit
    sum; the objective separates by coordinate, so each side is a 1-D grid
    search followed by a golden-section polish."""
    eps = 1e-6

    def side_max(x: np.ndarray, belief: float) -> float:
        order = np.argsort(x)
        xs, ws = x[order], w[order]
        # suffix sums of w*x and w above each grid threshold
        wx_suffix = np.concatenate([np.cumsum((ws * xs)[::-1])[::-1], [0.0]])
        w_suffix = np.concatenate([np.cumsum(ws[::-1])[::-1], [0.0]])
        grid = np.arange(belief + eps, 1.0 - eps, grid_step)
        idx = np.searchsorted(xs, grid, side="right")
        tail = wx_suffix[idx] - grid * w_suffix[idx]  # sum of w (x - a)+
        vals = tail * (grid - belief) / (grid * (1.0 - grid))

        def exact(aa):
            return (float(np.sum(ws * np.maximum(xs - aa, 0.0)))
                    * (aa - belief) / (aa * (1.0 - aa)))

        i = int(np.argmax(vals))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        return _golden_max(exact, lo, hi)

    return side_max(p, g) + side_max(1.0 - p, 1.0 - g)


def _golden_max(fn, lo: float, hi: float, tol: float = 1e-7) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = fn(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = fn(x1)
    return max(fn(0.5 * (lo + hi)), f1, f2)


def _achieved_realized(traj: Trajectory, g: float) -> np.ndarray:
    """Per-step realized-expectation profit at the quoted prices."""
    return realized_profit_terms(traj.p_true, traj.wealth, traj.a, traj.b, g)


def adversarial_regret(traj: Trajectory, g: float) -> float:
    """Hindsight-optimal fixed-price profit minus the achieved profit,
    both on the realized (p_t, w_t) stream."""
    if len(traj) == 0:
        return 0.0
    achieved = float(np.sum(_achieved_realized(traj, g)))
    return _hindsight_best(traj.p_true, traj.wealth, g) - achieved


def adversarial_regret_series(traj: Trajectory, g: float,
                              checkpoints) -> np.ndarray:
    """Adversarial regret of each prefix 1..t for t in `checkpoints`."""
    achieved = np.cumsum(_achieved_realized(traj, g))
    out = []
    for t in checkpoints:
        t = int(t)
        if t < 1 or t > len(traj):
            raise ValueError(f"checkpoint {t} outside [1, {len(traj)}]")
        best = _hindsight_best(traj.p_true[:t], traj.wealth[:t], g)
        out.append(best - achieved[t - 1])
    return np.asarray(out)


def regret_rate_fit(series, ts=None) -> float:
    """Least-squares slope of log regret vs log t over the final decade.

    Raises DegenerateSeriesError when the tail is non-positive (a policy that
    beats the benchmark has no growth rate to fit).
    """
    series = np.asarray(series, dtype=float)
    if ts is None:
        ts = np.arange(1, len(series) + 1, dtype=float)
    else:
        ts = np.asarray(ts, dtype=float)
    if len(series) < 10:
        raise ValueError(f"series too short to fit ({len(series)} points)")
    mask = ts >= ts[-1] / 10.0
    tail_t, tail_r = ts[mask], series[mask]
    if np.any(tail_r <= 0.0):
        raise DegenerateSeriesError(
            "regret tail is non-positive: sublinear, dominated by the benchmark")
    slope, _ = np.polyfit(np.log(tail_t), np.log(tail_r), 1)
    return float(slope)
