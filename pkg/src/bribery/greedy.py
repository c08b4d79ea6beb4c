"""Greedy bribing, dominance between count strategies, profitability regime."""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

from .core import (BriberyError, EffortStrategy, Fresh, Market, Rater, SellerState,
                   payoff)

TOL = 1e-9


class Dominance(enum.Enum):
    STRICT = "StrictlyDominates"
    WEAK = "WeaklyDominates"
    INCOMPARABLE = "Incomparable"


@dataclass(frozen=True)
class Budget:
    amount: float

    def __post_init__(self):
        if not self.amount >= 0:
            raise BriberyError(f"budget must be >= 0, got {self.amount!r}")


def greedy_strategy(seller: SellerState, fresh_pool: int, budget: Budget | float) -> EffortStrategy:
    """Spend the budget lifting the lowest ratings to 1, then on fresh buyers.

    Equal ratings are visited in their original order.  Fresh buyers are
    tagged ``0 .. fresh_pool - 1`` and each receives at most one unit.
    """
    remaining = budget.amount if isinstance(budget, Budget) else Budget(budget).amount
    efforts = {}
    order = sorted(range(len(seller.ratings)), key=lambda j: seller.ratings[j])
    for j in order:
        if remaining <= 0:
            break
        r = seller.ratings[j]
        if r < 1:
            spend = min(1 - r, remaining)
            efforts[Rater(seller.id, j)] = spend
            remaining -= spend
    for tag in range(fresh_pool):
        if remaining <= 0:
            break
        spend = min(1.0, remaining)
        efforts[Fresh(tag)] = spend
        remaining -= spend
    return EffortStrategy(efforts)


class NoPotentialBuyersError(BriberyError):
    """The market has no potential buyers, so bribery cannot pay off."""


def is_profitable_regime(market: Market, seller_index: int) -> bool:
    """False when ``rater_count / potential >= k``: no bribe can turn a profit."""
    pool = market.potential_buyers
    if pool <= 0:
        raise NoPotentialBuyersError("no potential buyers in the market")
    return market.sellers[seller_index].rater_count / pool < market.profit_per_purchase


def opponent_profiles(market: Market, seller_index: int, caps):
    """Every opponent combination within ``caps`` (own slot set to 0)."""
    ranges = [range(c + 1) if j != seller_index else (0,) for j, c in enumerate(caps)]
    return itertools.product(*ranges)


def dominates(market: Market, seller_index: int, a: int, b: int, caps) -> Dominance:
    """Compare own counts ``a`` and ``b`` over all feasible rival combinations.

    A rival combination counts only when both ``a`` and ``b`` are feasible
    against it.
    """
    if not (0 <= a <= caps[seller_index] and 0 <= b <= caps[seller_index]):
        raise BriberyError(f"counts {a}, {b} outside cap {caps[seller_index]}")
    pool = market.potential_buyers
    strict = True
    compared = False
    for rivals in opponent_profiles(market, seller_index, caps):
        if sum(rivals) + max(a, b) > pool:
            continue
        compared = True
        pa = payoff(market, seller_index, _with(rivals, seller_index, a))
        pb = payoff(market, seller_index, _with(rivals, seller_index, b))
        if pa < pb - TOL:
            return Dominance.INCOMPARABLE
        if pa <= pb + TOL:
            strict = False
    if not compared:
        return Dominance.INCOMPARABLE
    return Dominance.STRICT if strict else Dominance.WEAK


def _with(profile, index, value):
    profile = list(profile)
    profile[index] = value
    return tuple(profile)
