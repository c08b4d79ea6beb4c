"""Scenario files: a YAML description of a market and everything run on it."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .core import BriberyError, Market, SellerState
from .dynamic import ArrivalProcess, BeliefModel

SCHEMA_VERSION = 1


class ScenarioError(BriberyError):
    """A scenario file failed validation."""


@dataclass
class FairnessSpec:
    seller: int
    fair_mean: float
    cap: int | None = None


@dataclass
class Scenario:
    name: str
    market: Market
    caps: tuple[int, ...] | None = None
    budget: float | None = None
    order: tuple[int, ...] = ()
    beliefs: tuple[BeliefModel, ...] = ()
    policy: str = "static"
    arrivals: ArrivalProcess = field(default_factory=ArrivalProcess)
    slots: int = 1
    fairness: FairnessSpec | None = None

    def seller_index(self, ref) -> int:
        try:
            return _seller_index(self.market, ref)
        except KeyError:
            raise ScenarioError(f"unknown seller {ref!r}") from None


def _seller_index(market: Market, ref) -> int:
    ids = [str(s.id) for s in market.sellers]
    if str(ref) in ids:
        return ids.index(str(ref))
    raise KeyError(ref)


class _Reader:
    """Walks the parsed document while remembering where each field lives."""

    def __init__(self, source: str, node):
        self.source = source
        self.root = node

    def fail(self, path: str, message: str):
        line = self._line(path)
        where = f"{self.source}:{line}" if line else self.source
        raise ScenarioError(f"{where}: {path}: {message}")

    def _line(self, path: str):
        node = self.root
        best = getattr(node, "start_mark", None)
        for part in path.replace("]", "").replace("[", ".").split("."):
            if not part:
                continue
            if isinstance(node, yaml.MappingNode):
                nxt = next((v for k, v in node.value if k.value == part), None)
            elif isinstance(node, yaml.SequenceNode) and part.isdigit() and int(part) < len(node.value):
                nxt = node.value[int(part)]
            else:
                nxt = None
            if nxt is None:
                break
            node = nxt
            best = node.start_mark
        return best.line + 1 if best is not None else None

    def number(self, value, path, *, integer=False, lo=None, hi=None, positive=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        if integer and int(value) != value:
            self.fail(path, f"expected an integer, got {value!r}")
        if math.isnan(value) or math.isinf(value):
            self.fail(path, "must be finite")
        if positive and not value > 0:
            self.fail(path, f"must be > 0, got {value!r}")
        if lo is not None and value < lo:
            self.fail(path, f"must be >= {lo}, got {value!r}")
        if hi is not None and value > hi:
            self.fail(path, f"must be <= {hi}, got {value!r}")
        return int(value) if integer else float(value)


def load_scenario(path: str | Path) -> Scenario:
    """Load a scenario file, or a bundled scenario by name (e.g. ``example1``)."""
    path = str(path)
    if not Path(path).exists():
        bundled = resources.files("bribery") / "scenarios" / f"{path}.yaml"
        if bundled.is_file():
            return parse_scenario(bundled.read_text(), f"{path}.yaml")
        raise ScenarioError(f"{path}: no such scenario file")
    return parse_scenario(Path(path).read_text(), path)


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        node = yaml.compose(text)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{source}: invalid YAML: {exc}") from None
    rd = _Reader(source, node)
    if not isinstance(doc, dict):
        rd.fail("", "expected a mapping at top level")
    known = {"schema", "name", "market", "caps", "budget", "order", "beliefs", "policy",
             "arrivals", "slots", "fairness"}
    for key in doc:
        if key not in known:
            rd.fail(str(key), "unknown field")
    if doc.get("schema") != SCHEMA_VERSION:
        rd.fail("schema", f"expected schema version {SCHEMA_VERSION}, got {doc.get('schema')!r}")

    market = _parse_market(rd, doc.get("market"))
    m = market.size

    def seller_ref(ref, path):
        try:
            return _seller_index(market, ref)
        except KeyError:
            rd.fail(path, f"unknown seller {ref!r}")

    caps = None
    if doc.get("caps") is not None:
        raw = doc["caps"]
        if not isinstance(raw, list) or len(raw) != m:
            rd.fail("caps", f"expected a list of {m} counts")
        caps = tuple(rd.number(c, f"caps[{n}]", integer=True, lo=0) for n, c in enumerate(raw))

    budget = None
    if doc.get("budget") is not None:
        budget = rd.number(doc["budget"], "budget", lo=0)

    order = tuple(range(m))
    if doc.get("order") is not None:
        raw = doc["order"]
        if not isinstance(raw, list):
            rd.fail("order", "expected a list of seller ids")
        order = tuple(seller_ref(r, f"order[{n}]") for n, r in enumerate(raw))
        if sorted(order) != list(range(m)):
            rd.fail("order", "must name every seller exactly once")

    beliefs = [BeliefModel.truth()] * m
    raw = doc.get("beliefs") or {}
    if not isinstance(raw, dict):
        rd.fail("beliefs", "expected a mapping from seller id to belief")
    for ref, spec in raw.items():
        path = f"beliefs.{ref}"
        idx = seller_ref(ref, path)
        if not isinstance(spec, dict) or "support" not in spec or "weights" not in spec:
            rd.fail(path, "expected support and weights")
        relative = bool(spec.get("relative", False))
        support = [rd.number(v, f"{path}.support[{n}]", integer=True, lo=None if relative else 0)
                   for n, v in enumerate(spec["support"])]
        weights = [rd.number(v, f"{path}.weights[{n}]", lo=0) for n, v in enumerate(spec["weights"])]
        try:
            beliefs[idx] = BeliefModel(tuple(support), tuple(weights), relative)
        except BriberyError as exc:
            rd.fail(path, str(exc))

    policy = doc.get("policy", "static")
    if policy not in ("static", "sequential"):
        rd.fail("policy", f"expected 'static' or 'sequential', got {policy!r}")

    arrivals = ArrivalProcess()
    if doc.get("arrivals") is not None:
        spec = doc["arrivals"]
        if not isinstance(spec, dict):
            rd.fail("arrivals", "expected a mapping with 'rates' and 'seed'")
        rates = spec.get("rates", 0)
        if isinstance(rates, list):
            rates = tuple(rd.number(v, f"arrivals.rates[{n}]", lo=0) for n, v in enumerate(rates))
        else:
            rates = rd.number(rates, "arrivals.rates", lo=0)
        seed = rd.number(spec.get("seed", 0), "arrivals.seed", integer=True, lo=0, hi=2 ** 64 - 1)
        arrivals = ArrivalProcess(rates, seed)

    slots = rd.number(doc.get("slots", 1), "slots", integer=True, lo=0)

    fairness = None
    if doc.get("fairness") is not None:
        spec = doc["fairness"]
        if not isinstance(spec, dict):
            rd.fail("fairness", "expected a mapping")
        idx = seller_ref(spec.get("seller"), "fairness.seller")
        fair_mean = rd.number(spec.get("fair_mean"), "fairness.fair_mean", lo=0, hi=1)
        cap = spec.get("cap")
        if cap is not None:
            cap = rd.number(cap, "fairness.cap", integer=True, lo=0, hi=market.potential_buyers)
        fairness = FairnessSpec(idx, fair_mean, cap)

    name = str(doc.get("name", Path(source).stem))
    return Scenario(name, market, caps, budget, order, tuple(beliefs), policy, arrivals,
                    slots, fairness)


def _parse_market(rd: _Reader, spec) -> Market:
    if not isinstance(spec, dict):
        rd.fail("market", "expected a mapping")
    sellers = spec.get("sellers")
    if not isinstance(sellers, list):
        rd.fail("market.sellers", "expected a list of sellers")
    states = []
    for n, s in enumerate(sellers):
        path = f"market.sellers[{n}]"
        if not isinstance(s, dict) or "id" not in s:
            rd.fail(path, "expected a mapping with an id")
        if "ratings" in s:
            if not isinstance(s["ratings"], list):
                rd.fail(f"{path}.ratings", "expected a list of ratings")
            ratings = tuple(rd.number(r, f"{path}.ratings[{j}]", lo=0, hi=1)
                            for j, r in enumerate(s["ratings"]))
            count = s.get("rater_count", len(ratings))
            count = rd.number(count, f"{path}.rater_count", integer=True, lo=len(ratings))
        elif "count" in s and "mean" in s:
            count = rd.number(s["count"], f"{path}.count", integer=True, lo=0)
            mean = rd.number(s["mean"], f"{path}.mean", lo=0, hi=1)
            ratings = (mean,) * count
        else:
            rd.fail(path, "give either 'ratings' or both 'count' and 'mean'")
        states.append(SellerState(str(s["id"]), ratings, count))
    total = rd.number(spec.get("total_buyers"), "market.total_buyers", integer=True, lo=0)
    k = rd.number(spec.get("profit_per_purchase"), "market.profit_per_purchase", positive=True)
    exponent = rd.number(spec.get("snowball_exponent", 1.0), "market.snowball_exponent", positive=True)
    scale = rd.number(spec.get("snowball_scale", 1.0), "market.snowball_scale", positive=True)
    try:
        return Market(tuple(states), total, k, exponent, scale)
    except BriberyError as exc:
        rd.fail("market", str(exc))


def dump_scenario(scenario: Scenario) -> str:
    """Serialise a scenario back to YAML (ratings written out in full)."""
    market = scenario.market
    doc = {
        "schema": SCHEMA_VERSION,
        "name": scenario.name,
        "market": {
            "total_buyers": market.total_buyers,
            "profit_per_purchase": market.profit_per_purchase,
            "snowball_exponent": market.snowball_exponent,
            "snowball_scale": market.snowball_scale,
            "sellers": [{"id": str(s.id), "ratings": list(s.ratings), "rater_count": s.rater_count}
                        for s in market.sellers],
        },
        "order": [str(market.sellers[i].id) for i in scenario.order],
        "policy": scenario.policy,
        "slots": scenario.slots,
        "arrivals": {"rates": (list(scenario.arrivals.rate_schedule)
                               if isinstance(scenario.arrivals.rate_schedule, (list, tuple))
                               else scenario.arrivals.rate_schedule),
                     "seed": scenario.arrivals.seed},
        "beliefs": {str(market.sellers[i].id): {"support": list(b.support), "weights": list(b.weights),
                                                "relative": b.relative}
                    for i, b in enumerate(scenario.beliefs)},
    }
    if scenario.caps is not None:
        doc["caps"] = list(scenario.caps)
    if scenario.budget is not None:
        doc["budget"] = scenario.budget
    if scenario.fairness is not None:
        f = scenario.fairness
        doc["fairness"] = {"seller": str(market.sellers[f.seller].id), "fair_mean": f.fair_mean,
                           "cap": f.cap}
    return yaml.safe_dump(doc, sort_keys=False)
