"""Online price-setting policies behind one sequential interface.

Each policy quotes a price pair, observes one bettor's response, and updates
its state; observations arrive strictly in bettor order.  Implemented:

- FixedPolicy: constant quotes (benchmark / control).
- SaPolicy: stochastic approximation driving the first-order-condition
  residual of the expected-profit function to zero, one side per bet.
- FtlPolicy: follow-the-leader under fair odds — track the running mean
  belief estimate and quote its closed-form optimal fair price.
- RiskBalancePolicy: heuristic that nudges prices to equalise the total
  stakes on the two sides.
- LmsrPolicy: logarithmic-market-scoring-rule cost-function market maker;
  bettors trade shares directly instead of taking fixed-odds bets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .agents import BettorDraw, Side
from .errors import NoBetObservedError
from .market import Prices, critical_mrl, solve_fair_optimal

__all__ = [
    "BetObservation",
    "estimate_belief",
    "FixedPolicy",
    "SaPolicy",
    "FtlPolicy",
    "RiskBalancePolicy",
    "LmsrPolicy",
    "sa_default_schedule",
]

_PRICE_CEIL = 1.0 - 1e-9
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _logaddexp(x: float, y: float) -> float:
    if x < y:
        x, y = y, x
    return x + math.log1p(math.exp(y - x))


def _golden_min(fn, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Golden-section minimisation of a unimodal scalar function."""
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = fn(x1), fn(x2)
    while hi - lo > tol:
        if f1 > f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = fn(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = fn(x1)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BetObservation:
    """What the bookmaker sees: side, stake, and a wealth estimate."""

    side: Side
    stake: float
    wealth_estimate: float

    def __post_init__(self):
        if self.stake < 0.0:
            raise ValueError(f"stake {self.stake} must be >= 0")
        if self.wealth_estimate <= 0.0:
            raise ValueError(
                f"wealth_estimate {self.wealth_estimate} must be > 0")


def estimate_belief(prices: Prices, bet: BetObservation) -> float:
    """Invert the Kelly stake to an unbiased belief estimate.

    side R: p_hat = a + (1-a) v/w;  side L: p_hat = (1-b)(1 - v/w).
    The stake ratio is clipped to [0, 1] so estimates stay in [0, 1] even
    when the disclosed stake exceeds the wealth estimate.
    """
    if bet.side is Side.NO_BET:
        raise NoBetObservedError("belief estimation needs an observed bet")
    ratio = min(bet.stake / bet.wealth_estimate, 1.0)
    if bet.side is Side.FOR_R:
        return prices.a + (1.0 - prices.a) * ratio
    return (1.0 - prices.b) * (1.0 - ratio)


def sa_default_schedule() -> tuple[float, float]:
    """(gamma, m) for the learning rate eta_t = gamma / (t + m)."""
    return (300.0, 5000.0)


class FixedPolicy:
    """Constant quotes; the benchmark policy."""

    def __init__(self, prices: Prices):
        self._prices = prices

    def quote(self) -> Prices:
        return self._prices

    def observe(self, bet: BetObservation) -> None:
        pass


class SaPolicy:
    """Stochastic approximation on both prices under unfair odds.

    On a side-R bet:  a <- a - eta (a + G(a) - p_hat), G = critical_mrl(., g).
    On a side-L bet:  b <- b - eta (b + G'(b) - q_hat), G' = critical_mrl(., 1-g).
    eta = gamma / (t + m) where t counts observed bets (shared across sides
    by default; per-side counters optional).  No-bet arrivals change nothing
    and do not advance t.  Prices are clamped to [g, 1) / [1-g, 1) as a
    numerical backstop; nonzero clamp counts indicate a misconfigured eta.
    """

    def __init__(self, g: float, a0: float, b0: float,
                 gamma: float = 300.0, m: float = 5000.0,
                 per_side_counters: bool = False):
        if not 0.0 < g < 1.0:
            raise ValueError(f"g must lie in (0, 1), got {g}")
        if not g <= a0 < 1.0 or not 1.0 - g <= b0 < 1.0:
            raise ValueError(
                f"initial prices ({a0}, {b0}) outside [{g}, 1) x [{1 - g}, 1)")
        if gamma <= 0.0 or m <= 0.0:
            raise ValueError("gamma and m must be positive")
        self.g = g
        self.a = float(a0)
        self.b = float(b0)
        self.gamma = gamma
        self.m = m
        self.per_side_counters = per_side_counters
        self.t = 0
        self.t_a = 0
        self.t_b = 0
        self.clamp_count = 0

    def quote(self) -> Prices:
        return Prices(self.a, self.b)

    def observe(self, bet: BetObservation) -> None:
        if bet.side is Side.NO_BET:
            return
        p_hat = estimate_belief(self.quote(), bet)
        if bet.side is Side.FOR_R:
            t = self.t_a if self.per_side_counters else self.t
            eta = self.gamma / (t + self.m)
            a = self.a - eta * (self.a + critical_mrl(self.a, self.g) - p_hat)
            clamped = min(max(a, self.g), _PRICE_CEIL)
            if clamped != a:
                self.clamp_count += 1
            self.a = clamped
            self.t_a += 1
        else:
            q_hat = 1.0 - p_hat
            t = self.t_b if self.per_side_counters else self.t
            eta = self.gamma / (t + self.m)
            b = self.b - eta * (self.b + critical_mrl(self.b, 1.0 - self.g) - q_hat)
            clamped = min(max(b, 1.0 - self.g), _PRICE_CEIL)
            if clamped != b:
                self.clamp_count += 1
            self.b = clamped
            self.t_b += 1
        self.t += 1


def clip(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


class FtlPolicy:
    """Follow-the-leader under fair odds (b = 1 - a always).

    Tracks the running mean of the belief estimates and re-quotes the
    closed-form optimal fair price of the clipped mean after every bet.
    """

    def __init__(self, g: float, a0: float | None = None, tau: float = 0.01):
        if not 0.0 < g < 1.0:
            raise ValueError(f"g must lie in (0, 1), got {g}")
        if not 0.0 < tau < 0.5:
            raise ValueError(f"tau must lie in (0, 0.5), got {tau}")
        self.g = g
        self.tau = tau
        self.a = float(a0) if a0 is not None else g
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"initial price {self.a} outside (0, 1)")
        self.t = 0
        self.mean_estimate = math.nan  # undefined until the first bet

    def quote(self) -> Prices:
        return Prices(self.a, 1.0 - self.a)

    def observe(self, bet: BetObservation) -> None:
        if bet.side is Side.NO_BET:
            return
        p_hat = estimate_belief(self.quote(), bet)
        self.t += 1
        if self.t == 1:
            self.mean_estimate = p_hat
        else:
            self.mean_estimate += (p_hat - self.mean_estimate) / self.t
        self.a = solve_fair_optimal(
            clip(self.mean_estimate, self.tau, 1.0 - self.tau), self.g)


class RiskBalancePolicy:
    """Nudges prices to equalise the running stake totals on the two sides:
    a += eta (B_R - B_L), b += eta (B_L - B_R), both updated every arrival."""

    def __init__(self, a0: float, b0: float,
                 gamma: float = 300.0, m: float = 5000.0):
        self._prices = Prices(a0, b0)  # validates
        self.a = float(a0)
        self.b = float(b0)
        self.gamma = gamma
        self.m = m
        self.t = 0
        self.total_r = 0.0
        self.total_l = 0.0

    def quote(self) -> Prices:
        return Prices(self.a, self.b)

    def observe(self, bet: BetObservation) -> None:
        if bet.side is Side.FOR_R:
            self.total_r += bet.stake
        elif bet.side is Side.FOR_L:
            self.total_l += bet.stake
        eta = self.gamma / (self.t + self.m)
        imbalance = self.total_r - self.total_l
        self.a = clip(self.a + eta * imbalance, 1e-9, _PRICE_CEIL)
        self.b = clip(self.b - eta * imbalance, 1e-9, _PRICE_CEIL)
        deficit = 1.0 - (self.a + self.b)
        if deficit > 0.0:  # keep the no-arbitrage overround
            self.a = clip(self.a + 0.5 * deficit, 1e-9, _PRICE_CEIL)
            self.b = clip(self.b + 0.5 * deficit, 1e-9, _PRICE_CEIL)
        self.t += 1


class LmsrPolicy:
    """Cost-function market maker C(s) = beta log(e^{s_R/beta} + e^{s_L/beta}).

    Quoted prices are the cost gradient and always sum to one.  A bettor
    does not take a fixed-odds bet; trade() solves their 1-D log-utility
    share purchase and moves the quote.
    """

    def __init__(self, liquidity: float, s_r: float = 0.0, s_l: float = 0.0):
        if liquidity <= 0.0:
            raise ValueError(f"liquidity {liquidity} must be > 0")
        self.beta = float(liquidity)
        self.s_r = float(s_r)
        self.s_l = float(s_l)

    def _price_r(self) -> float:
        # softmax of (s_R, s_L)/beta, computed stably
        d = (self.s_l - self.s_r) / self.beta
        return 1.0 / (1.0 + math.exp(d))

    def quote(self) -> Prices:
        pi = self._price_r()
        return Prices(pi, 1.0 - pi)

    def _cost_of(self, shares: float, side: Side) -> float:
        sr = self.s_r + (shares if side is Side.FOR_R else 0.0)
        sl = self.s_l + (shares if side is Side.FOR_L else 0.0)
        base = self.beta * _logaddexp(self.s_r / self.beta, self.s_l / self.beta)
        return self.beta * _logaddexp(sr / self.beta, sl / self.beta) - base

    def _budget_shares(self, budget: float, side: Side) -> float:
        """Shares x with cost exactly `budget`: invert the cost function,
        e^{(s+x)/beta} = e^{(base+budget)/beta} - e^{s_other/beta}."""
        base = _logaddexp(self.s_r / self.beta, self.s_l / self.beta)
        target = base + budget / self.beta
        own = (self.s_r if side is Side.FOR_R else self.s_l) / self.beta
        other = (self.s_l if side is Side.FOR_R else self.s_r) / self.beta
        # log(e^target - e^other), stable since target > other
        inner = target + math.log1p(-math.exp(other - target))
        return self.beta * inner - (own * self.beta)

    def trade(self, draw: BettorDraw) -> tuple[Side, float, float]:
        """Execute the bettor's optimal share purchase.

        Returns (side, cost paid, shares bought)."""
        pi = self._price_r()
        p, w = draw.belief, draw.wealth
        if w <= 0.0 or p == pi:
            return (Side.NO_BET, 0.0, 0.0)
        if p > pi:
            side, win_prob = Side.FOR_R, p
        else:
            side, win_prob = Side.FOR_L, 1.0 - p

        x_max = self._budget_shares(w * (1.0 - 1e-12), side)

        def neg_log_utility(x):
            cost = self._cost_of(x, side)
            lose = max(w - cost, 1e-300)
            return -(win_prob * math.log(w - cost + x)
                     + (1.0 - win_prob) * math.log(lose))

        shares = _golden_min(neg_log_utility, 0.0, x_max, tol=1e-9)
        cost = self._cost_of(shares, side)
        if shares <= 1e-9 or cost <= 0.0:
            return (Side.NO_BET, 0.0, 0.0)
        if side is Side.FOR_R:
            self.s_r += shares
        else:
            self.s_l += shares
        return (side, float(cost), shares)

    def observe(self, bet: BetObservation) -> None:
        raise TypeError("LmsrPolicy trades via trade(draw); it does not take "
                        "fixed-odds bet observations")
