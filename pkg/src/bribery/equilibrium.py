"""Static solution concepts over the count-strategy game.

Everything works on a :class:`PayoffMatrix`, a dense tensor over all count
profiles within per-seller caps.  Profiles that bribe more buyers than the
potential pool are infeasible and stored as NaN.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (BriberyError, CountProfile, Market, UndefinedMeanError,
                   check_profile, utility_formula)
from .greedy import TOL, is_profitable_regime


class NonConvergenceError(BriberyError):
    """Best-response iteration cycled instead of reaching a fixpoint."""


@dataclass(frozen=True, eq=False)
class PayoffMatrix:
    """Per-seller values for every profile within ``caps``.

    ``net[..., i]`` holds seller i's utility minus cost; ``initial[i]`` is its
    no-bribery utility, so ``payoff = net - initial``.
    """

    market: Market
    caps: CountProfile
    net: np.ndarray
    initial: np.ndarray

    @property
    def feasible(self) -> np.ndarray:
        return ~np.isnan(self.net[..., 0]) if self.market.size else np.ones((), bool)

    @property
    def payoff(self) -> np.ndarray:
        return self.net - self.initial

    @property
    def size(self) -> int:
        return self.market.size

    def values(self, kind: str = "net") -> np.ndarray:
        if kind == "net":
            return self.net
        if kind == "payoff":
            return self.payoff
        raise ValueError(f"unknown value kind {kind!r}")

    def cell(self, profile: Sequence[int], kind: str = "net") -> tuple[float, ...] | None:
        """Values at ``profile``, or None for an infeasible cell."""
        row = self.values(kind)[tuple(profile)]
        if np.isnan(row).any():
            return None
        return tuple(float(v) for v in row)

    def profiles(self):
        """Feasible profiles in lexicographic order."""
        for profile in itertools.product(*(range(c + 1) for c in self.caps)):
            if self.feasible[profile]:
                yield profile

    def welfare(self, profile: Sequence[int]) -> float:
        return float(self.payoff[tuple(profile)].sum())


def default_caps(market: Market) -> CountProfile:
    return (market.potential_buyers,) * market.size


def build_matrix(market: Market, caps: Sequence[int] | None = None) -> PayoffMatrix:
    caps = default_caps(market) if caps is None else tuple(int(c) for c in caps)
    if len(caps) != market.size or any(c < 0 for c in caps):
        raise BriberyError(f"caps {caps} must hold one non-negative count per seller")
    pool = market.potential_buyers
    for i, s in enumerate(market.sellers):
        if s.rater_count == 0:
            raise UndefinedMeanError(f"seller {s.id!r} has no raters; utility undefined at count 0")
    shape = tuple(c + 1 for c in caps)
    grid = np.indices(shape)
    total = grid.sum(axis=0)
    net = np.empty(shape + (market.size,))
    for i in range(market.size):
        net[..., i] = utility_formula(market, i, grid[i], total) - grid[i]
    net[total > pool] = np.nan
    initial = np.array([float(utility_formula(market, i, 0, 0)) for i in range(market.size)])
    return PayoffMatrix(market, caps, net, initial)


def best_response(matrix: PayoffMatrix, seller_index: int, opponents: Sequence[int | None]) -> list[int]:
    """All of seller's counts maximising its payoff against ``opponents``.

    The seller's own entry in ``opponents`` is ignored.
    """
    index = list(opponents)
    index[seller_index] = slice(None)
    column = np.nan_to_num(matrix.net[tuple(index) + (seller_index,)], nan=-np.inf)
    best = column.max()
    if best == -np.inf:
        return []
    return [int(c) for c in np.flatnonzero(column >= best - TOL)]


def pure_nash(matrix: PayoffMatrix) -> list[CountProfile]:
    """Every feasible profile where each seller plays a best response."""
    ok = matrix.feasible.copy()
    for i in range(matrix.size):
        vals = np.nan_to_num(matrix.net[..., i], nan=-np.inf)
        best = vals.max(axis=i, keepdims=True)
        ok &= vals >= best - TOL
    return [tuple(int(v) for v in p) for p in np.argwhere(ok)]


def _strictly_dominated(block: np.ndarray, a: int, b: int) -> bool:
    """Row ``a`` beats row ``b`` at every opponent combination where both exist."""
    ra, rb = block[a], block[b]
    both = ~(np.isnan(ra) | np.isnan(rb))
    return bool(both.any() and (ra[both] > rb[both] + TOL).all())


def iterated_elimination(matrix: PayoffMatrix, seller_order: Sequence[int] | None = None,
                         one_at_a_time: bool = False) -> list[CountProfile]:
    """Iterated elimination of strictly dominated strategies.

    Returns the feasible profiles left once no seller has a strictly
    dominated count over the residual game.  ``seller_order`` and
    ``one_at_a_time`` change the elimination sequence but not the result.
    """
    alive = [list(range(c + 1)) for c in matrix.caps]
    order = list(range(matrix.size)) if seller_order is None else list(seller_order)
    changed = True
    while changed:
        changed = False
        for i in order:
            sub = matrix.net[np.ix_(*alive)][..., i]
            block = np.moveaxis(sub, i, 0).reshape(len(alive[i]), -1)
            dead = {b for b in range(len(alive[i]))
                    if any(_strictly_dominated(block, a, b) for a in range(len(alive[i])) if a != b)}
            if dead:
                if one_at_a_time:
                    dead = {min(dead)}
                alive[i] = [c for pos, c in enumerate(alive[i]) if pos not in dead]
                changed = True
                if one_at_a_time:
                    break
    return [p for p in itertools.product(*alive) if matrix.feasible[p]]


def social_optimum(matrix: PayoffMatrix) -> tuple[CountProfile, float]:
    """Profile maximising total payoff; ties go to the fewest bribes, then lexicographic."""
    welfare = np.where(matrix.feasible, matrix.payoff.sum(axis=-1), -np.inf)
    best = welfare.max()
    ties = [tuple(int(v) for v in p) for p in np.argwhere(welfare >= best - TOL)]
    profile = min(ties, key=lambda p: (sum(p), p))
    return profile, float(welfare[profile])


def first_order_profile(market: Market, caps: Sequence[int] | None = None) -> CountProfile:
    """Discrete solution of the sellers' first-order conditions.

    Synchronous best-response iteration from the zero profile.  Sellers in
    the unprofitable regime stay at 0.  Within a tie the current count is
    kept, otherwise the smallest best count is taken.
    """
    pool = market.potential_buyers
    if pool <= 0:
        raise BriberyError("first_order_profile needs a positive potential-buyer pool")
    caps = default_caps(market) if caps is None else tuple(int(c) for c in caps)
    if len(caps) != market.size:
        raise BriberyError(f"caps {caps} do not match {market.size} sellers")
    pinned = [not is_profitable_regime(market, i) for i in range(market.size)]

    def respond(i, profile):
        others = sum(profile) - profile[i]
        top = 0 if pinned[i] else min(caps[i], pool - others)
        if top < 0:
            raise BriberyError(f"no feasible count for seller {i} against {profile}")
        counts = np.arange(top + 1)
        vals = utility_formula(market, i, counts, others + counts) - counts
        best = vals.max()
        ties = np.flatnonzero(vals >= best - TOL)
        return profile[i] if profile[i] in ties else int(ties[0])

    profile = (0,) * market.size
    seen = {profile}
    limit = math.prod(c + 1 for c in caps)
    for _ in range(limit + 1):
        nxt = tuple(respond(i, profile) for i in range(market.size))
        if sum(nxt) > pool:
            # simultaneous replies may overshoot the pool; settle sequentially
            nxt = list(profile)
            for i in range(market.size):
                nxt[i] = respond(i, tuple(nxt))
            nxt = tuple(nxt)
        if nxt == profile:
            break
        if nxt in seen:
            raise NonConvergenceError(f"best-response iteration cycles through {nxt}")
        seen.add(nxt)
        profile = nxt
    else:
        raise NonConvergenceError("best-response iteration did not settle")
    check_profile(market, profile)
    if not _is_equilibrium(market, caps, profile):
        raise NonConvergenceError(f"fixpoint {profile} is not a Nash equilibrium")
    return profile


def _is_equilibrium(market: Market, caps, profile) -> bool:
    pool = market.potential_buyers
    for i in range(market.size):
        others = sum(profile) - profile[i]
        counts = np.arange(min(caps[i], pool - others) + 1)
        vals = utility_formula(market, i, counts, others + counts) - counts
        if vals[profile[i]] < vals.max() - TOL:
            return False
    return True


@dataclass
class EquilibriumReport:
    pure_nash: list[CountProfile]
    iesds_survivors: list[CountProfile]
    social_optimum: CountProfile
    welfare: float
    nash_profile: CountProfile | None
    nash_total: int | None
    optimum_total: int
    gap: int | None
    notes: list[str] = field(default_factory=list)

    @property
    def gap_nonnegative(self) -> bool | None:
        return None if self.gap is None else self.gap >= 0


def overbribery_gap(matrix: PayoffMatrix) -> EquilibriumReport:
    """Compare total bribes at equilibrium with the welfare optimum.

    With several equilibria the one bribing the most buyers is used.
    """
    nash = pure_nash(matrix)
    survivors = iterated_elimination(matrix)
    optimum, welfare = social_optimum(matrix)
    notes = []
    if nash:
        chosen = max(nash, key=lambda p: (sum(p), p))
        nash_total = sum(chosen)
        gap = nash_total - sum(optimum)
        if len(nash) > 1:
            notes.append(f"{len(nash)} pure equilibria; using the one with most bribes")
        if gap < 0:
            notes.append("equilibrium bribes fewer buyers than the social optimum")
    else:
        chosen = nash_total = gap = None
        notes.append("no pure equilibrium within caps")
    return EquilibriumReport(nash, survivors, optimum, welfare, chosen, nash_total,
                             sum(optimum), gap, notes)


def write_matrix_csv(matrix: PayoffMatrix, fh, kind: str = "net") -> None:
    """One row per profile: counts, then per-seller values (blank if infeasible)."""
    ids = [str(s.id) for s in matrix.market.sellers]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([f"count_{x}" for x in ids] + [f"{kind}_{x}" for x in ids])
    vals = matrix.values(kind)
    for profile in itertools.product(*(range(c + 1) for c in matrix.caps)):
        row = vals[profile]
        cells = [""] * len(ids) if np.isnan(row).any() else [repr(float(v)) for v in row]
        writer.writerow(list(profile) + cells)
