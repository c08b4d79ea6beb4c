"""Bribery under uncertainty: Poisson arrivals, beliefs, sequential moves.

Sellers move one after another.  Each mover knows what earlier movers did,
holds a belief over the size of the potential pool, and a conjecture
(``policy``) about how later movers react.  Payoffs are evaluated with the
static count model; a profile that bribes more buyers than an imagined pool
simply finds nobody left to sell to (the remaining pool is clipped at 0).
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import BriberyError, Market, SellerState, net_utility
from .equilibrium import build_matrix, overbribery_gap
from .greedy import TOL

History = tuple[int, ...]
Policy = Callable[[History], Mapping[int, float]] | Mapping[History, Mapping[int, float]]

DEFAULT_MAX_PROFILES = 1_000_000


class TreeTooLargeError(BriberyError):
    """The game tree exceeds the configured enumeration bound."""


class MissingPolicyError(BriberyError):
    """A later mover has no conditional distribution for some history."""


@dataclass(frozen=True)
class ArrivalProcess:
    """Poisson arrivals of new potential buyers, one draw per time slot.

    ``rate_schedule`` is a constant, a sequence indexed by slot (the last
    entry repeats), or a callable ``slot -> rate``.
    """

    rate_schedule: float | Sequence[float] | Callable[[int], float] = 0.0
    seed: int = 0

    def rate(self, slot: int) -> float:
        sched = self.rate_schedule
        if callable(sched):
            lam = sched(slot)
        elif isinstance(sched, (int, float)):
            lam = sched
        else:
            lam = sched[min(slot, len(sched) - 1)] if len(sched) else 0.0
        if not lam >= 0:
            raise BriberyError(f"arrival rate at slot {slot} must be >= 0, got {lam!r}")
        return float(lam)


def sample_arrivals(process: ArrivalProcess, slots: int) -> list[int]:
    if slots < 0:
        raise BriberyError("slots must be >= 0")
    rng = np.random.default_rng(process.seed)
    return [int(rng.poisson(process.rate(t))) for t in range(slots)]


@dataclass(frozen=True)
class BeliefModel:
    """Finite belief over the number of potential buyers.

    With ``relative=True`` the support holds offsets from the true pool,
    which lets a belief follow a market whose pool changes over time.
    """

    support: tuple[int, ...]
    weights: tuple[float, ...]
    relative: bool = False

    def __post_init__(self):
        support = tuple(int(s) for s in self.support)
        weights = tuple(float(w) for w in self.weights)
        if not support or len(support) != len(weights):
            raise BriberyError("belief needs matching, non-empty support and weights")
        if any(w < 0 for w in weights) or abs(math.fsum(weights) - 1) > 1e-12:
            raise BriberyError(f"belief weights {weights} must be >= 0 and sum to 1")
        if not self.relative and any(s < 0 for s in support):
            raise BriberyError("absolute belief support must be >= 0")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point(cls, potential: int = 0, relative: bool = False) -> "BeliefModel":
        return cls((potential,), (1.0,), relative)

    @classmethod
    def truth(cls) -> "BeliefModel":
        """Point mass on the actual pool."""
        return cls.point(0, relative=True)

    def atoms(self, actual: int) -> list[tuple[int, float]]:
        if self.relative:
            return [(max(0, actual + s), w) for s, w in zip(self.support, self.weights)]
        return list(zip(self.support, self.weights))

    def mode(self, actual: int) -> int:
        atoms = self.atoms(actual)
        top = max(w for _, w in atoms)
        return min(n for n, w in atoms if w == top)


def fixed_policy(count: int) -> Callable[[History], dict[int, float]]:
    """Conjecture that a mover plays ``count`` whatever it observes."""
    return lambda history: {count: 1.0}


def plan_policy(plan: Mapping[History, int]) -> Callable[[History], dict[int, float]]:
    return lambda history: {plan[history]: 1.0}


@dataclass(frozen=True, eq=False)
class SequentialGame:
    """Sellers move in ``order``; histories list counts in move order."""

    market: Market
    order: tuple[int, ...]
    caps: tuple[int, ...]
    beliefs: tuple[BeliefModel, ...]
    policies: tuple[Policy | None, ...] = ()

    def __post_init__(self):
        m = self.market.size
        object.__setattr__(self, "order", tuple(self.order))
        object.__setattr__(self, "caps", tuple(int(c) for c in self.caps))
        object.__setattr__(self, "beliefs", tuple(self.beliefs))
        object.__setattr__(self, "policies", tuple(self.policies) or (None,) * m)
        if sorted(self.order) != list(range(m)):
            raise BriberyError(f"order {self.order} is not a permutation of {m} sellers")
        if len(self.caps) != m or any(c < 0 for c in self.caps):
            raise BriberyError(f"caps {self.caps} must hold one count >= 0 per seller")
        if len(self.beliefs) != m or len(self.policies) != m:
            raise BriberyError("need one belief and one policy slot per seller")

    def position(self, seller_index: int) -> int:
        return self.order.index(seller_index)

    def with_policies(self, policies) -> "SequentialGame":
        return replace(self, policies=tuple(policies))


def _distribution(game: SequentialGame, mover: int, history: History) -> dict[int, float]:
    policy = game.policies[mover]
    try:
        if policy is None:
            raise KeyError(history)
        dist = policy(history) if callable(policy) else policy[history]
    except KeyError:
        raise MissingPolicyError(
            f"no conditional distribution for seller {mover} after history {history}"
        ) from None
    dist = {int(c): float(p) for c, p in dict(dist).items() if p > 0}
    if abs(math.fsum(dist.values()) - 1) > 1e-9 or any(p < 0 for p in dist.values()):
        raise BriberyError(f"policy of seller {mover} at {history} does not sum to 1")
    if any(not 0 <= c <= game.caps[mover] for c in dist):
        raise BriberyError(f"policy of seller {mover} at {history} leaves caps")
    return dist


def _continuations(game: SequentialGame, history: History):
    """Yield (full history, probability) over later movers' policies."""
    pos = len(history)
    if pos == len(game.order):
        yield history, 1.0
        return
    mover = game.order[pos]
    for count, p in sorted(_distribution(game, mover, history).items()):
        for full, q in _continuations(game, history + (count,)):
            yield full, p * q


def _clipped_payoff(market: Market, i: int, profile, pool: int) -> float:
    seller = market.sellers[i]
    own, total = profile[i], sum(profile)
    k = market.profit_per_purchase * market.snowball_scale
    mean = (seller.rating_mass + own) / (seller.rater_count + own)
    base = seller.rating_mass / seller.rater_count
    return (k * max(pool - total, 0) * mean ** market.snowball_exponent
            - own - k * pool * base ** market.snowball_exponent)


def expected_payoff(game: SequentialGame, seller_index: int, history: Sequence[int]) -> np.ndarray:
    """Expected payoff of every own count ``0..cap`` after ``history``.

    The expectation runs over later movers' conditional policies and over
    the seller's belief about the potential pool.
    """
    history = tuple(int(c) for c in history)
    if game.position(seller_index) != len(history):
        raise BriberyError(
            f"seller {seller_index} moves at position {game.position(seller_index)}, "
            f"history has {len(history)} moves"
        )
    if game.market.sellers[seller_index].rater_count == 0:
        raise BriberyError(f"seller {seller_index} has no raters; payoff undefined")
    atoms = game.beliefs[seller_index].atoms(game.market.potential_buyers)
    out = np.zeros(game.caps[seller_index] + 1)
    for own in range(len(out)):
        total = 0.0
        for moves, prob in _continuations(game, history + (own,)):
            profile = [0] * game.market.size
            for mover, c in zip(game.order, moves):
                profile[mover] = c
            total += prob * math.fsum(w * _clipped_payoff(game.market, seller_index, profile, n)
                                      for n, w in atoms)
        out[own] = total
    return out


def _argmax_set(values: np.ndarray) -> list[int]:
    best = values.max()
    return [int(c) for c in np.flatnonzero(values >= best - TOL)]


def bayesian_best_response(game: SequentialGame, seller_index: int, history: Sequence[int]) -> list[int]:
    return _argmax_set(expected_payoff(game, seller_index, history))


@dataclass
class SequentialSolution:
    plans: dict[int, dict[History, int]]
    path: History
    profile: tuple[int, ...]
    expected: tuple[float, ...]


def _histories(game: SequentialGame, pos: int):
    return itertools.product(*(range(game.caps[game.order[p]] + 1) for p in range(pos)))


def solve_sequential(game: SequentialGame, max_profiles: int = DEFAULT_MAX_PROFILES) -> SequentialSolution:
    """Backward induction over the move tree.

    The last mover best-responds at every history under its own belief;
    each earlier mover optimises against the plans of those after it.  Ties
    go to the lowest count.  Supplied policies are not consulted.
    """
    leaves = math.prod(c + 1 for c in game.caps)
    if leaves > max_profiles:
        raise TreeTooLargeError(f"game tree has {leaves} leaves, bound is {max_profiles}")
    m = len(game.order)
    plans: dict[int, dict[History, int]] = {}
    policies = [None] * m
    for pos in reversed(range(m)):
        mover = game.order[pos]
        current = game.with_policies(policies)
        plans[mover] = {h: bayesian_best_response(current, mover, h)[0] for h in _histories(game, pos)}
        policies[mover] = plan_policy(plans[mover])
    solved = game.with_policies(policies)
    path: History = ()
    for pos in range(m):
        path += (plans[game.order[pos]][path],)
    profile = [0] * m
    for mover, c in zip(game.order, path):
        profile[mover] = c
    expected = tuple(float(expected_payoff(solved, mover, path[:pos])[path[pos]])
                     for pos, mover in enumerate(game.order))
    solution = SequentialSolution(plans, path, tuple(profile), expected)
    assert deviation_gain(game, solution) <= TOL
    return solution


def deviation_gain(game: SequentialGame, solution: SequentialSolution) -> float:
    """Largest gain any mover gets from a one-shot deviation at any history."""
    solved = game.with_policies([plan_policy(solution.plans[s]) for s in range(len(game.order))])
    gain = 0.0
    for pos, mover in enumerate(game.order):
        for h in _histories(game, pos):
            values = expected_payoff(solved, mover, h)
            gain = max(gain, float(values.max() - values[solution.plans[mover][h]]))
    return gain


@dataclass
class SlotRecord:
    slot: int
    arrivals: int
    potential: int
    counts: tuple[int, ...]
    utilities: tuple[float, ...]
    total_buyers: int


@dataclass
class Trace:
    seller_ids: tuple[str, ...]
    records: list[SlotRecord] = field(default_factory=list)
    final_market: Market | None = None

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["slot", "arrivals"]
                        + [f"count_{s}" for s in self.seller_ids]
                        + [f"utility_{s}" for s in self.seller_ids]
                        + ["potential"])
        for r in self.records:
            writer.writerow([r.slot, r.arrivals, *r.counts,
                             *(repr(u) for u in r.utilities), r.potential])


def static_conjecture(game: SequentialGame, mover: int) -> tuple[int, ...]:
    """Static equilibrium profile of the market as ``mover`` imagines it.

    The imagined pool is the mode of the mover's belief; the equilibrium is
    the one an equilibrium report selects.
    """
    pool = game.beliefs[mover].mode(game.market.potential_buyers)
    market = game.market.with_potential(pool)
    caps = tuple(min(c, pool) for c in game.caps)
    report = overbribery_gap(build_matrix(market, caps))
    if report.nash_profile is None:
        raise BriberyError(f"no static equilibrium for seller {mover}'s conjecture")
    return report.nash_profile


def play_slot(game: SequentialGame, policy: str = "static") -> tuple[int, ...]:
    """Let each seller pick its Bayesian best response in move order.

    ``policy="static"``: every mover conjectures that later movers play the
    static equilibrium of the pool it believes in.  ``policy="sequential"``:
    later movers are expected to follow their backward-induction plans.
    Counts are then clipped to the buyers actually left.
    """
    if policy == "sequential":
        path = solve_sequential(game).path
    elif policy == "static":
        path = ()
        for pos, mover in enumerate(game.order):
            guess = static_conjecture(game, mover)
            conj = game.with_policies([fixed_policy(guess[s]) for s in range(len(game.order))])
            path += (bayesian_best_response(conj, mover, path)[0],)
    else:
        raise BriberyError(f"unknown policy {policy!r}")
    profile = [0] * len(game.order)
    left = game.market.potential_buyers
    for mover, c in zip(game.order, path):
        profile[mover] = min(c, left)
        left -= profile[mover]
    return tuple(profile)


def simulate(game: SequentialGame, process: ArrivalProcess, slots: int,
             policy: str = "static", caps: Sequence[int] | None = None) -> Trace:
    """Run ``slots`` rounds of arrivals and bribery.

    Arrivals join the potential pool; bribed buyers become raters with
    rating 1.  ``caps=None`` lets every seller bribe up to the current pool.
    """
    market = game.market
    trace = Trace(tuple(str(s.id) for s in market.sellers))
    for slot, arrivals in enumerate(sample_arrivals(process, slots)):
        market = replace(market, total_buyers=market.total_buyers + arrivals)
        pool = market.potential_buyers
        if market.size:
            slot_caps = tuple(min(c, pool) for c in (caps or (pool,) * market.size))
            profile = play_slot(replace(game, market=market, caps=slot_caps), policy)
            utilities = tuple(net_utility(market, i, profile) for i in range(market.size))
        else:
            profile, utilities = (), ()
        trace.records.append(SlotRecord(slot, arrivals, pool, profile, utilities, market.total_buyers))
        for i, c in enumerate(profile):
            s = market.sellers[i]
            market = market.with_seller(i, SellerState(s.id, s.ratings + (1.0,) * c, s.rater_count + c))
    trace.final_market = market
    return trace
