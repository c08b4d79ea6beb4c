"""How many fair raters it takes before bribery stops paying.

Fair raters are buyers whose ratings cannot be bought.  Installing a cohort
of them adds ``count`` raters with total rating mass ``count * mean_rating``
and removes them from the potential pool; each one is also a purchase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BriberyError, Market, SellerState, utility_formula
from .greedy import TOL

# The aggregate "|B_i| + r^F" in the fair-utility numerator is read as
# existing rating mass plus fair rating mass.
INTERPRETATION = "numerator = existing rating mass + fair rating mass"


@dataclass(frozen=True)
class FairCohort:
    count: int
    mean_rating: float

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 0:
            raise BriberyError("fair cohort count must be a non-negative integer")
        if not 0.0 <= self.mean_rating <= 1.0:
            raise BriberyError("fair cohort mean rating must lie in [0, 1]")


def utility_with_fair(market: Market, seller_index: int, cohort: FairCohort) -> float:
    """Utility once the cohort has rated: remaining pool at the new mean, plus k per fair purchase."""
    if cohort.count > market.potential_buyers:
        raise BriberyError(
            f"cohort of {cohort.count} exceeds {market.potential_buyers} potential buyers"
        )
    seller = market.sellers[seller_index]
    raters = seller.rater_count + cohort.count
    if raters == 0:
        raise BriberyError(f"seller {seller.id!r} would have no raters")
    mean = (seller.rating_mass + cohort.count * cohort.mean_rating) / raters
    k = market.profit_per_purchase
    return (market.potential_buyers - cohort.count) * k * market.snowball_scale \
        * mean ** market.snowball_exponent + k * cohort.count


def install_cohort(market: Market, seller_index: int, cohort: FairCohort) -> Market:
    """The cohort becomes raters of the seller; total buyers are unchanged."""
    s = market.sellers[seller_index]
    seller = SellerState(s.id, s.ratings + (cohort.mean_rating,) * cohort.count,
                         s.rater_count + cohort.count)
    return market.with_seller(seller_index, seller)


def max_bribery_payoff(market: Market, seller_index: int) -> float:
    """Best payoff over bribing 0..pool fresh buyers, rivals idle."""
    pool = market.potential_buyers
    counts = np.arange(pool + 1)
    u = utility_formula(market, seller_index, counts, counts)
    return float((u - counts - u[0]).max())


def min_fair_raters_for_proofness(market: Market, seller_index: int, fair_mean: float,
                                  cap: int | None = None) -> int | None:
    """Smallest cohort size after which no bribe has strictly positive payoff.

    Returns None when no size up to ``cap`` is enough.
    """
    pool = market.potential_buyers
    cap = pool if cap is None else cap
    if cap > pool:
        raise BriberyError(f"cap {cap} exceeds {pool} potential buyers")
    for c in range(cap + 1):
        installed = install_cohort(market, seller_index, FairCohort(c, fair_mean))
        if installed.sellers[seller_index].rater_count == 0:
            continue
        if max_bribery_payoff(installed, seller_index) <= TOL:
            return c
    return None


@dataclass(frozen=True)
class CriticalPoint:
    roots: tuple[float, ...]
    discriminant: float
    flag: str = "as-printed"


def critical_point_paper(market: Market, seller_index: int, fair_mean: float) -> CriticalPoint:
    """Real roots of ``x**2 - r*x + pool*(raters + r) = 0`` taken literally."""
    r = fair_mean
    c = market.potential_buyers * (market.sellers[seller_index].rater_count + r)
    disc = r * r - 4 * c
    if disc < 0:
        roots = ()
    elif disc == 0:
        roots = (r / 2,)
    else:
        sq = math.sqrt(disc)
        roots = tuple(sorted(((r - sq) / 2, (r + sq) / 2)))
    return CriticalPoint(roots, disc)
