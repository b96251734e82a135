"""Kelly bettor: optimal response to a quoted price pair.

A bettor with belief p and wealth w facing prices (a, b) stakes a fixed
fraction of wealth on the side where they see an edge:

    side R, stake w * (p - a) / (1 - a)   if p > a
    no bet                                 if 1 - b <= p <= a
    side L, stake w * (q - b) / (1 - b)   if q = 1 - p > b

The two bet conditions are mutually exclusive whenever a + b >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = ["Side", "BettorDraw", "BetOutcome", "kelly_bet", "bettor_utility"]

# keeps downstream wealth accounting finite when p == 1 would imply stake == w
_FULL_STAKE_MARGIN = 1e-12


class Side(Enum):
    FOR_R = "R"
    FOR_L = "L"
    NO_BET = "-"


@dataclass(frozen=True)
class BettorDraw:
    belief: float  # probability of event R
    wealth: float

    def __post_init__(self):
        if not 0.0 <= self.belief <= 1.0:
            raise ValueError(f"belief {self.belief} outside [0, 1]")
        if self.wealth < 0.0:
            raise ValueError(f"wealth {self.wealth} must be >= 0")


@dataclass(frozen=True)
class BetOutcome:
    side: Side
    stake: float


def kelly_bet(draw: BettorDraw, prices) -> BetOutcome:
    """Log-wealth-maximising response to prices; ties resolve to no bet."""
    p, w = draw.belief, draw.wealth
    a, b = prices.a, prices.b
    if p > a:
        stake = w * (p - a) / (1.0 - a)
        return BetOutcome(Side.FOR_R, min(stake, w * (1.0 - _FULL_STAKE_MARGIN)))
    q = 1.0 - p
    if q > b:
        stake = w * (q - b) / (1.0 - b)
        return BetOutcome(Side.FOR_L, min(stake, w * (1.0 - _FULL_STAKE_MARGIN)))
    return BetOutcome(Side.NO_BET, 0.0)


def bettor_utility(draw: BettorDraw, prices, stake: float, side: Side) -> float:
    """Expected log wealth after staking on the given side.

    Exists to verify that kelly_bet maximises it; requires stake < wealth so
    both log arguments stay positive.
    """
    p, w = draw.belief, draw.wealth
    if not 0.0 <= stake < w:
        raise ValueError(f"stake {stake} outside [0, wealth={w})")
    if side is Side.FOR_R:
        win, lose, price = p, 1.0 - p, prices.a
    elif side is Side.FOR_L:
        win, lose, price = 1.0 - p, p, prices.b
    else:
        raise ValueError("utility is defined for a chosen side only")
    gain = (1.0 - price) / price * stake
    return win * math.log(w + gain) + lose * math.log(w - stake)
