"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 solver non-convergence,
4 enumeration bound exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

from . import equilibrium as eq
from .calibration import ObservationSet, calibrate
from .core import BriberyError, strategy_cost, strategy_payoff, utility_formula
from .dynamic import ArrivalProcess, SequentialGame, TreeTooLargeError, simulate
from .fairness import (INTERPRETATION, FairCohort, critical_point_paper,
                       min_fair_raters_for_proofness, utility_with_fair)
from .greedy import Budget, greedy_strategy, is_profitable_regime
from .scenario import Scenario, load_scenario

MAX_PROFILES_ENV = "BRIBERY_MAX_PROFILES"
DEFAULT_MAX_PROFILES = 1_000_000

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENT, EXIT_TOO_LARGE = 0, 2, 3, 4


class SizeBoundError(BriberyError):
    pass


def max_profiles() -> int:
    raw = os.environ.get(MAX_PROFILES_ENV)
    if not raw:
        return DEFAULT_MAX_PROFILES
    try:
        return int(raw)
    except ValueError:
        raise BriberyError(f"{MAX_PROFILES_ENV} must be an integer, got {raw!r}") from None


def _check_size(caps) -> None:
    size = math.prod(c + 1 for c in caps)
    bound = max_profiles()
    if size > bound:
        raise SizeBoundError(f"{size} profiles to enumerate exceeds bound {bound} (set {MAX_PROFILES_ENV})")


def _caps(args, scenario: Scenario):
    if args.caps:
        try:
            caps = tuple(int(c) for c in args.caps.split(","))
        except ValueError:
            raise BriberyError(f"--caps: expected comma-separated integers, got {args.caps!r}") from None
        if len(caps) != scenario.market.size or any(c < 0 for c in caps):
            raise BriberyError(f"--caps: need {scenario.market.size} non-negative counts")
        return caps
    if scenario.caps is not None:
        return scenario.caps
    return eq.default_caps(scenario.market)


def _write_report(out: Path, stem: str, data: dict, lines: list[str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    text = "\n".join(lines) + "\n"
    (out / f"{stem}.txt").write_text(text)
    sys.stdout.write(text)


def _table(rows: list[tuple[str, str]]) -> list[str]:
    width = max((len(k) for k, _ in rows), default=0)
    return [f"{k:<{width}}  {v}" for k, v in rows]


def _fmt(profile) -> str:
    return "(" + ", ".join(str(c) for c in profile) + ")"


def cmd_matrix(args) -> int:
    scenario = load_scenario(args.scenario)
    caps = _caps(args, scenario)
    _check_size(caps)
    matrix = eq.build_matrix(scenario.market, caps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "matrix.csv", "w", newline="") as fh:
        eq.write_matrix_csv(matrix, fh, args.kind)
    if args.surface is not None:
        idx = scenario.seller_index(args.surface)
        with open(out / f"surface_{scenario.market.sellers[idx].id}.csv", "w", newline="") as fh:
            write_surface(scenario, idx, caps, fh)
    print(f"wrote {out / 'matrix.csv'} ({sum(1 for _ in matrix.profiles())} feasible profiles)")
    return EXIT_OK


def write_surface(scenario: Scenario, idx: int, caps, fh) -> None:
    """Seller's net utility over (own count, rivals' total count).

    Utility depends on rivals only through their total, so this grid covers
    every profile within ``caps``.
    """
    market = scenario.market
    pool = market.potential_buyers
    rivals_max = sum(caps) - caps[idx]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["own"] + [f"rivals_{r}" for r in range(rivals_max + 1)])
    for own in range(caps[idx] + 1):
        row = [own]
        for rivals in range(rivals_max + 1):
            if own + rivals > pool:
                row.append("")
            else:
                row.append(repr(float(utility_formula(market, idx, own, own + rivals)) - own))
        writer.writerow(row)


def cmd_solve(args) -> int:
    scenario = load_scenario(args.scenario)
    market = scenario.market
    caps = _caps(args, scenario)
    _check_size(caps)
    matrix = eq.build_matrix(market, caps)
    report = eq.overbribery_gap(matrix)
    ids = [str(s.id) for s in market.sellers]
    notes = list(report.notes)
    try:
        first_order = list(eq.first_order_profile(market, caps))
    except eq.NonConvergenceError as exc:
        if args.require_convergence:
            raise
        first_order = None
        notes.append(f"first-order iteration: {exc}")
    except BriberyError as exc:
        first_order = None
        notes.append(f"first-order iteration: {exc}")
    outcome = matrix.cell(report.nash_profile) if report.nash_profile is not None else None
    regimes = {}
    if market.potential_buyers > 0:
        regimes = {ids[i]: is_profitable_regime(market, i) for i in range(market.size)}
    data = {
        "scenario": scenario.name,
        "sellers": ids,
        "caps": list(caps),
        "pure_nash": [list(p) for p in report.pure_nash],
        "iesds_survivors": [list(p) for p in report.iesds_survivors],
        "nash_profile": None if report.nash_profile is None else list(report.nash_profile),
        "nash_outcome": None if outcome is None else [round(v, 10) for v in outcome],
        "first_order_profile": first_order,
        "social_optimum": list(report.social_optimum),
        "social_welfare_payoff": round(report.welfare, 10),
        "social_welfare_net": round(float(matrix.net[report.social_optimum].sum()), 10),
        "nash_total": report.nash_total,
        "optimum_total": report.optimum_total,
        "gap": report.gap,
        "profitable_regime": regimes,
        "notes": notes,
    }
    if scenario.budget is not None:
        greedy = {}
        for i, s in enumerate(market.sellers):
            strat = greedy_strategy(s, market.potential_buyers, Budget(scenario.budget))
            greedy[ids[i]] = {
                "cost": round(strategy_cost(strat), 10),
                "fresh_buyers": strat.fresh_targets,
                "payoff": round(strategy_payoff(market, i, strat), 10),
            }
        data["greedy"] = greedy
    rows = [
        ("scenario", scenario.name),
        ("sellers", ", ".join(ids)),
        ("caps", _fmt(caps)),
        ("pure nash", " ".join(_fmt(p) for p in report.pure_nash) or "none"),
        ("iesds survivors", " ".join(_fmt(p) for p in report.iesds_survivors)),
        ("nash outcome", "none" if outcome is None else
         f"{_fmt(report.nash_profile)} -> " + ", ".join(f"{v:.2f}" for v in outcome)),
        ("first-order profile", "none" if first_order is None else _fmt(first_order)),
        ("social optimum", f"{_fmt(report.social_optimum)} welfare {report.welfare:.4f} "
                           f"(net {data['social_welfare_net']:.2f})"),
        ("O* / O** / gap", f"{report.nash_total} / {report.optimum_total} / {report.gap}"),
    ]
    rows += [("note", n) for n in notes]
    _write_report(Path(args.out), "solve", data, _table(rows))
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    market = scenario.market
    caps = _caps(args, scenario) if (args.caps or scenario.caps is not None) else None
    if caps is not None:
        _check_size(caps)
    else:
        _check_size(eq.default_caps(market))
    seed = scenario.arrivals.seed if args.seed is None else args.seed
    process = ArrivalProcess(scenario.arrivals.rate_schedule, seed)
    slots = scenario.slots if args.slots is None else args.slots
    game = SequentialGame(market, scenario.order, caps or eq.default_caps(market), scenario.beliefs)
    trace = simulate(game, process, slots, scenario.policy, caps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trace.csv", "w", newline="") as fh:
        trace.write_csv(fh)
    print(f"wrote {out / 'trace.csv'} ({len(trace.records)} slots, seed {seed})")
    return EXIT_OK


def cmd_fairness(args) -> int:
    scenario = load_scenario(args.scenario)
    if scenario.fairness is None:
        raise BriberyError(f"{args.scenario}: scenario has no fairness section")
    spec = scenario.fairness
    market = scenario.market
    _check_size((market.potential_buyers,))
    threshold = min_fair_raters_for_proofness(market, spec.seller, spec.fair_mean, spec.cap)
    crit = critical_point_paper(market, spec.seller, spec.fair_mean)
    seller_id = str(market.sellers[spec.seller].id)
    data = {
        "scenario": scenario.name,
        "seller": seller_id,
        "fair_mean": spec.fair_mean,
        "cap": spec.cap,
        "min_fair_raters": threshold,
        "found": threshold is not None,
        "utility_at_threshold": (None if threshold is None else
                                 round(utility_with_fair(market, spec.seller,
                                                         FairCohort(threshold, spec.fair_mean)), 10)),
        "critical_point": {"roots": list(crit.roots), "discriminant": crit.discriminant,
                           "flag": crit.flag},
        "interpretation": INTERPRETATION,
    }
    rows = [
        ("scenario", scenario.name),
        ("seller", seller_id),
        ("fair mean", f"{spec.fair_mean:g}"),
        ("min fair raters", "NotFound" if threshold is None else str(threshold)),
        ("quadratic roots", ", ".join(f"{r:.6g}" for r in crit.roots) or "none (real)"),
        ("discriminant", f"{crit.discriminant:.6g} [{crit.flag}]"),
        ("interpretation", INTERPRETATION),
    ]
    _write_report(Path(args.out), "fairness", data, _table(rows))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    with open(args.data, newline="") as fh:
        obs = ObservationSet.read_csv(fh)
    fit, power, loglog = calibrate(obs)
    data = {
        "a": fit.a, "n": fit.n, "b": fit.b, "omega1": fit.omega1, "omega2": fit.omega2,
        "residual_reviews": fit.residual_reviews, "residual_installs": fit.residual_installs,
        "points_reviews": power.points, "dropped_reviews": power.dropped,
        "points_installs": loglog.points, "dropped_installs": loglog.dropped,
    }
    rows = [(k, f"{v:.10g}" if isinstance(v, float) else str(v)) for k, v in data.items()]
    _write_report(Path(args.out), "calibrate", data, _table(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bribery", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True,
                           help="scenario YAML file, or a bundled name such as example1")
            p.add_argument("--caps", help="comma-separated per-seller count caps")
        p.add_argument("--out", default="out", help="output directory (default: %(default)s)")
        p.add_argument("--seed", type=int, help="override the scenario seed")

    p = sub.add_parser("matrix", help="tabulate the payoff tensor as CSV")
    common(p)
    p.add_argument("--surface", help="also write a payoff-surface grid for this seller id")
    p.add_argument("--kind", choices=("net", "payoff"), default="net",
                   help="net = utility minus cost; payoff = gain over no bribery")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("solve", help="equilibria, social optimum and over-bribery gap")
    common(p)
    p.add_argument("--require-convergence", action="store_true",
                   help="fail (exit 3) if best-response iteration cycles")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="run the sequential game over arrival slots")
    common(p)
    p.add_argument("--slots", type=int, help="override the scenario slot count")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fairness", help="fair-rater threshold for bribery-proofness")
    common(p)
    p.set_defaults(func=cmd_fairness)

    p = sub.add_parser("calibrate", help="fit the snowball model from rating,reviews,installs CSV")
    common(p, scenario=False)
    p.add_argument("--data", required=True, help="CSV with header rating,reviews,installs")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must fit in 64 unsigned bits", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except eq.NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENT
    except (SizeBoundError, TreeTooLargeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (BriberyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
