import numpy as np
import pytest

from bribery.core import Market, SellerState, example1_market

# Published Table 1 (seller i's net utility, seller j's net utility), indexed [phi_i][phi_j].
TABLE1 = [
    [(5.20, 13.00), (4.80, 15.00), (4.40, 14.50), (4.00, 13.00)],
    [(7.00, 12.00), (6.33, 13.67), (5.67, 13.00), (5.00, 11.40)],
    [(7.43, 11.00), (6.57, 12.33), (5.71, 11.50), (4.86, 9.80)],
    [(7.00, 10.00), (6.00, 11.00), (5.00, 10.00), (4.00, 8.20)],
]

ACCEPTANCE_LINES = []


def random_market(rng, max_sellers=3, max_buyers=30, k_range=(0.5, 4.0), min_pool=1,
                  max_raters=5):
    """Small market with at least one rater per seller and ``min_pool`` potential buyers."""
    m = int(rng.integers(1, max_sellers + 1))
    raters = rng.integers(1, max_raters + 1, size=m)
    while raters.sum() + min_pool > max_buyers:
        raters = np.maximum(1, raters - 1)
    total = int(rng.integers(raters.sum() + min_pool, max_buyers + 1))
    sellers = tuple(SellerState(f"s{i}", tuple(np.round(rng.uniform(0, 1, size=r), 3)), int(r))
                    for i, r in enumerate(raters))
    return Market(sellers, total, float(rng.uniform(*k_range)))


@pytest.fixture
def ex1():
    return example1_market()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_same_cost_strategy(rng, seller, fresh_pool, cost):
    """Spread ``cost`` over a random set of raters and fresh buyers.

    No target receives more than it takes to reach rating 1 (an effort is the
    amount needed to move a rating), so ``cost`` must fit the total headroom.
    """
    from bribery.core import EffortStrategy, Fresh, Rater

    targets = [(Rater(seller.id, j), 1.0 - r) for j, r in enumerate(seller.ratings) if r < 1]
    targets += [(Fresh(t), 1.0) for t in range(fresh_pool)]
    if cost <= 0 or not targets:
        return EffortStrategy()
    order = rng.permutation(len(targets))
    n = int(rng.integers(1, len(targets) + 1))
    chosen = list(order[:n])
    for extra in order[n:]:
        if sum(targets[c][1] for c in chosen) >= cost:
            break
        chosen.append(extra)
    room = np.array([targets[c][1] for c in chosen])
    assert room.sum() >= cost - 1e-12, "cost exceeds headroom"
    weights = rng.dirichlet(np.ones(len(chosen)))
    alloc = np.zeros(len(chosen))
    left = cost
    while left > 1e-15:
        open_ = alloc < room - 1e-15
        if not open_.any():
            break
        w = np.where(open_, weights, 0)
        step = np.minimum(room - alloc, left * w / w.sum())
        alloc += step
        left = cost - alloc.sum()
    return EffortStrategy({targets[c][0]: float(a) for c, a in zip(chosen, alloc) if a > 0})
