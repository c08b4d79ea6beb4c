import pytest

from bribery.core import (Fresh, Market, Rater, SellerState, payoff,
                          strategy_cost, strategy_payoff)
from bribery.greedy import (Budget, Dominance, NoPotentialBuyersError, dominates,
                            greedy_strategy, is_profitable_regime)

from conftest import random_market, random_same_cost_strategy


def test_greedy_lowest_first():
    s = SellerState("s", (0.8, 0.5))
    strat = greedy_strategy(s, 0, Budget(0.6))
    assert set(strat.efforts) == {Rater("s", 0), Rater("s", 1)}
    assert strat.efforts[Rater("s", 1)] == pytest.approx(0.5)
    assert strat.efforts[Rater("s", 0)] == pytest.approx(0.1)


def test_greedy_zero_budget():
    assert len(greedy_strategy(SellerState("s", (0.1,)), 3, 0.0)) == 0


def test_greedy_spills_to_fresh_buyers():
    strat = greedy_strategy(SellerState("s", (1.0, 1.0)), 2, Budget(1.5))
    assert strat.efforts == {Fresh(0): 1.0, Fresh(1): 0.5}


def test_greedy_cost_bounded_by_budget():
    s = SellerState("s", (0.9, 0.2))
    assert strategy_cost(greedy_strategy(s, 1, 0.5)) == pytest.approx(0.5)
    # everything saturates: 0.1 + 0.8 + 1 fresh buyer
    assert strategy_cost(greedy_strategy(s, 1, 10.0)) == pytest.approx(1.9)


def test_greedy_ties_keep_buyer_order():
    strat = greedy_strategy(SellerState("s", (0.4, 0.4, 0.4)), 0, 0.7)
    assert list(strat.efforts) == [Rater("s", 0), Rater("s", 1)]


def test_budget_rejects_negative():
    with pytest.raises(ValueError):
        Budget(-1)


def test_greedy_never_touches_saturated_raters(rng):
    for _ in range(200):
        ratings = tuple(rng.choice([1.0, *rng.uniform(0, 1, 3)], size=int(rng.integers(1, 6))))
        s = SellerState("s", ratings)
        strat = greedy_strategy(s, 3, float(rng.uniform(0, 6)))
        for target in strat.efforts:
            if isinstance(target, Rater):
                assert s.ratings[target.index] < 1


@pytest.mark.parametrize("raters, total, k, expected", [
    (5, 20, 2.0, True),     # 5 / 13 < 2 (seller i of the duopoly, j has 2 raters)
    (30, 42, 2.0, False),   # 30 / 10 >= 2
    (20, 32, 2.0, False),   # 20 / 10 == 2, boundary is unprofitable
])
def test_profitable_regime(raters, total, k, expected):
    market = Market((SellerState.uniform("a", raters, 0.3), SellerState.uniform("b", 2, 0.5)), total, k)
    assert is_profitable_regime(market, 0) is expected


def test_profitable_regime_needs_pool():
    market = Market((SellerState.uniform("a", 3, 0.3),), 3, 2.0)
    with pytest.raises(NoPotentialBuyersError):
        is_profitable_regime(market, 0)


def test_dominance_example1(ex1):
    caps = (3, 3)
    assert dominates(ex1, 1, 1, 0, caps) is Dominance.STRICT
    assert dominates(ex1, 1, 1, 2, caps) is Dominance.STRICT
    assert dominates(ex1, 1, 1, 3, caps) is Dominance.STRICT
    assert dominates(ex1, 0, 2, 2, caps) is Dominance.WEAK
    # (1, 0) and (3, 0) tie for seller i at 7.00
    assert dominates(ex1, 0, 1, 3, caps) is Dominance.WEAK
    assert dominates(ex1, 0, 2, 1, caps) is Dominance.INCOMPARABLE


def test_dominance_transitive(rng):
    for _ in range(20):
        market = random_market(rng, max_sellers=2, max_buyers=12)
        caps = (market.potential_buyers,) * market.size
        n = caps[0] + 1
        strict = {(a, b) for a in range(n) for b in range(n)
                  if a != b and dominates(market, 0, a, b, caps) is Dominance.STRICT}
        for a, b in strict:
            for b2, c in strict:
                if b2 == b and a != c:
                    assert (a, c) in strict


def test_greedy_beats_same_cost_strategies_small(rng):
    for _ in range(30):
        market = random_market(rng, max_sellers=2, max_buyers=15)
        seller = market.sellers[0]
        budget = float(rng.uniform(0, 4))
        strat = greedy_strategy(seller, market.potential_buyers, budget)
        best = strategy_payoff(market, 0, strat)
        for _ in range(20):
            other = random_same_cost_strategy(rng, seller, market.potential_buyers, strategy_cost(strat))
            assert best >= strategy_payoff(market, 0, other) - 1e-9


def test_lemma_count_strategies_unprofitable(rng):
    checked = 0
    while checked < 50:
        market = random_market(rng, max_sellers=2, max_buyers=30, k_range=(0.05, 1.0), max_raters=15)
        pool = market.potential_buyers
        for i in range(market.size):
            if is_profitable_regime(market, i):
                continue
            checked += 1
            best = max(payoff(market, i, tuple(c if j == i else 0 for j in range(market.size)))
                       for c in range(pool + 1))
            assert best <= 1e-9
