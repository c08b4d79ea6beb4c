"""Domain types and the utility/payoff algebra for bribery games.

A market holds ``M`` sellers, each evaluated by a set of raters.  Buyers that
have not interacted with any seller form the potential pool
``N_pot = total_buyers - sum(rater_count)``.  A seller's utility is
``k * scale * pool * mean ** exponent`` where ``pool`` is whatever is left of
the potential buyers after every seller has bribed its fresh buyers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Hashable, Mapping, Sequence

import numpy as np

CountProfile = tuple[int, ...]


class BriberyError(ValueError):
    """Base class for invalid inputs to the bribery model."""


class InfeasibleProfileError(BriberyError):
    """A count profile bribes more buyers than the potential pool holds."""


class UndefinedMeanError(BriberyError):
    """Mean rating requested for a seller with no raters at all."""


@dataclass(frozen=True)
class Rating:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not (0.0 <= v <= 1.0) or math.isnan(v):
            raise BriberyError(f"rating {self.value!r} outside [0, 1]")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class SellerState:
    """One seller's rating profile.

    ``rater_count`` is the number of buyers that interacted with the seller;
    it may exceed ``len(ratings)`` because not every buyer leaves a score.
    """

    id: Hashable
    ratings: tuple[float, ...] = ()
    rater_count: int | None = None

    def __post_init__(self):
        ratings = tuple(float(Rating(r)) for r in self.ratings)
        object.__setattr__(self, "ratings", ratings)
        count = len(ratings) if self.rater_count is None else self.rater_count
        if int(count) != count or count < 0:
            raise BriberyError(f"seller {self.id!r}: rater_count must be a non-negative integer")
        if count < len(ratings):
            raise BriberyError(
                f"seller {self.id!r}: rater_count {count} < number of ratings {len(ratings)}"
            )
        object.__setattr__(self, "rater_count", int(count))

    @classmethod
    def uniform(cls, id: Hashable, count: int, mean: float) -> "SellerState":
        """Seller with ``count`` raters all giving ``mean``."""
        return cls(id, (mean,) * count, count)

    @property
    def rating_mass(self) -> float:
        return math.fsum(self.ratings)

    @property
    def mean(self) -> float:
        return mean_rating(self)


@dataclass(frozen=True)
class Market:
    sellers: tuple[SellerState, ...]
    total_buyers: int
    profit_per_purchase: float
    snowball_exponent: float = 1.0
    snowball_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sellers", tuple(self.sellers))
        if int(self.total_buyers) != self.total_buyers or self.total_buyers < 0:
            raise BriberyError("total_buyers must be a non-negative integer")
        object.__setattr__(self, "total_buyers", int(self.total_buyers))
        if not self.profit_per_purchase > 0:
            raise BriberyError("profit_per_purchase must be positive")
        if not self.snowball_exponent > 0 or not self.snowball_scale > 0:
            raise BriberyError("snowball scale and exponent must be positive")
        ids = [s.id for s in self.sellers]
        if len(set(ids)) != len(ids):
            raise BriberyError("seller ids must be unique")
        if self.potential_buyers < 0:
            raise BriberyError(
                f"sum of rater counts {sum(s.rater_count for s in self.sellers)} "
                f"exceeds total_buyers {self.total_buyers}"
            )

    @property
    def size(self) -> int:
        return len(self.sellers)

    @property
    def potential_buyers(self) -> int:
        return self.total_buyers - sum(s.rater_count for s in self.sellers)

    def with_potential(self, potential: int) -> "Market":
        """Copy of the market whose potential pool is exactly ``potential``."""
        return replace(self, total_buyers=int(potential) + sum(s.rater_count for s in self.sellers))

    def with_seller(self, index: int, seller: SellerState) -> "Market":
        sellers = list(self.sellers)
        sellers[index] = seller
        return replace(self, sellers=tuple(sellers))


@dataclass(frozen=True)
class Rater:
    """An existing rater of ``seller``, addressed by position in its ratings."""

    seller: Hashable
    index: int


@dataclass(frozen=True)
class Fresh:
    """A buyer that has not interacted with any seller yet."""

    tag: Hashable


@dataclass(frozen=True)
class EffortStrategy:
    efforts: Mapping[Rater | Fresh, float] = field(default_factory=dict)

    def __post_init__(self):
        efforts = dict(self.efforts)
        for target, effort in efforts.items():
            if not isinstance(target, (Rater, Fresh)):
                raise BriberyError(f"unknown bribery target {target!r}")
            if not (effort >= 0) or math.isinf(effort):
                raise BriberyError(f"effort on {target!r} must be finite and >= 0")
        object.__setattr__(self, "efforts", efforts)

    @property
    def fresh_targets(self) -> int:
        return sum(isinstance(t, Fresh) for t in self.efforts)

    def __len__(self) -> int:
        return len(self.efforts)


def mean_rating(seller: SellerState) -> float:
    """Arithmetic mean of the seller's ratings; 0.0 for an empty profile."""
    if not seller.ratings:
        return 0.0
    return seller.rating_mass / len(seller.ratings)


def apply_effort(seller: SellerState, strategy: EffortStrategy) -> SellerState:
    """Return the seller state after bribery.

    Existing ratings move to ``min(1, r + effort)``; every fresh target adds a
    new rater with rating ``min(1, effort)``.
    """
    ratings = list(seller.ratings)
    added = []
    for target, effort in strategy.efforts.items():
        if isinstance(target, Rater):
            if target.seller != seller.id:
                raise BriberyError(f"target {target!r} is not a rater of seller {seller.id!r}")
            if not 0 <= target.index < len(ratings):
                raise BriberyError(f"seller {seller.id!r} has no rating at index {target.index}")
            ratings[target.index] = min(1.0, ratings[target.index] + effort)
        else:
            added.append(min(1.0, effort))
    return SellerState(seller.id, tuple(ratings) + tuple(added), seller.rater_count + len(added))


def strategy_cost(strategy: EffortStrategy) -> float:
    return math.fsum(strategy.efforts.values())


def count_cost(profile: Sequence[int], seller_index: int) -> float:
    # each fresh buyer lifted from unrated to 1 costs one unit of effort
    return float(profile[seller_index])


def check_profile(market: Market, profile: Sequence[int]) -> CountProfile:
    profile = tuple(profile)
    if len(profile) != market.size:
        raise BriberyError(f"profile {profile} has {len(profile)} entries, market has {market.size} sellers")
    for c in profile:
        if int(c) != c or c < 0:
            raise BriberyError(f"profile {profile} must hold non-negative integers")
    profile = tuple(int(c) for c in profile)
    if sum(profile) > market.potential_buyers:
        raise InfeasibleProfileError(
            f"profile {profile} bribes {sum(profile)} buyers, only {market.potential_buyers} potential"
        )
    return profile


def utility_formula(market: Market, seller_index: int, own, total, pool=None):
    """Utility of one seller as a function of its own and the total bribe count.

    Works elementwise on numpy arrays.  ``pool`` overrides the market's
    potential-buyer count.
    """
    seller = market.sellers[seller_index]
    pool = market.potential_buyers if pool is None else pool
    mean = (seller.rating_mass + own) / (seller.rater_count + own)
    return (market.profit_per_purchase * market.snowball_scale
            * (pool - total) * np.power(mean, market.snowball_exponent))


def utility(market: Market, seller_index: int, profile: Sequence[int]) -> float:
    """Post-bribery utility of ``seller_index`` under a count profile."""
    profile = check_profile(market, profile)
    own = profile[seller_index]
    if market.sellers[seller_index].rater_count + own == 0:
        raise UndefinedMeanError(f"seller {market.sellers[seller_index].id!r} has no raters")
    return float(utility_formula(market, seller_index, own, sum(profile)))


def initial_utility(market: Market, seller_index: int) -> float:
    return utility(market, seller_index, (0,) * market.size)


def net_utility(market: Market, seller_index: int, profile: Sequence[int]) -> float:
    """Utility minus bribery cost; the convention of the published bimatrix."""
    return utility(market, seller_index, profile) - count_cost(profile, seller_index)


def payoff(market: Market, seller_index: int, profile: Sequence[int]) -> float:
    """Gain over the no-bribery state: ``u(profile) - u(0) - cost``."""
    return net_utility(market, seller_index, profile) - initial_utility(market, seller_index)


def strategy_utility(market: Market, seller_index: int, strategy: EffortStrategy,
                     others: int = 0) -> float:
    """Utility after an effort strategy, with ``others`` buyers bribed by rivals.

    Fresh targets of the strategy leave the potential pool.
    """
    seller = apply_effort(market.sellers[seller_index], strategy)
    pool = market.potential_buyers - strategy.fresh_targets - others
    if pool < 0:
        raise InfeasibleProfileError(
            f"strategy and rivals bribe {strategy.fresh_targets + others} buyers, "
            f"only {market.potential_buyers} potential"
        )
    if seller.rater_count == 0:
        raise UndefinedMeanError(f"seller {seller.id!r} has no raters")
    mean = seller.rating_mass / seller.rater_count
    return (market.profit_per_purchase * market.snowball_scale * pool
            * mean ** market.snowball_exponent)


def strategy_payoff(market: Market, seller_index: int, strategy: EffortStrategy,
                    others: int = 0) -> float:
    return (strategy_utility(market, seller_index, strategy, others)
            - initial_utility(market, seller_index) - strategy_cost(strategy))


def example1_market() -> Market:
    """The two-seller duopoly used throughout the docs and tests."""
    return Market(
        sellers=(SellerState.uniform("i", 5, 0.2), SellerState.uniform("j", 2, 0.5)),
        total_buyers=20,
        profit_per_purchase=2.0,
    )
