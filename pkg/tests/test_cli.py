import csv
import json

import numpy as np
import pytest

from bribery.cli import main
from bribery.core import Market, SellerState, utility
from bribery.equilibrium import NonConvergenceError, first_order_profile
from bribery.scenario import Scenario, ScenarioError, dump_scenario, load_scenario, parse_scenario

from conftest import TABLE1, random_market


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def write_scenario(tmp_path, market, name="s", **kw):
    path = tmp_path / f"{name}.yaml"
    path.write_text(dump_scenario(Scenario(name, market, order=tuple(range(market.size)),
                                           beliefs=(), **kw)))
    return path


def test_bundled_example1_encoding():
    sc = load_scenario("example1")
    m = sc.market
    assert [s.rater_count for s in m.sellers] == [5, 2]
    assert [s.mean for s in m.sellers] == pytest.approx([0.2, 0.5])
    assert (m.total_buyers, m.profit_per_purchase, sc.caps) == (20, 2.0, (3, 3))


def test_matrix_example1(tmp_path):
    assert main(["matrix", "--scenario", "example1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "matrix.csv")
    assert rows[0] == ["count_i", "count_j", "net_i", "net_j"]
    assert len(rows) == 17
    for a, b, vi, vj in rows[1:]:
        assert (float(vi), float(vj)) == pytest.approx(TABLE1[int(a)][int(b)], abs=0.005)


def test_matrix_zero_caps(tmp_path):
    assert main(["matrix", "--scenario", "example1", "--out", str(tmp_path), "--caps", "0,0"]) == 0
    assert len(read_csv(tmp_path / "matrix.csv")) == 2


def test_matrix_surface(tmp_path, ex1):
    assert main(["matrix", "--scenario", "example1", "--out", str(tmp_path),
                 "--caps", "10,10", "--surface", "i"]) == 0
    rows = read_csv(tmp_path / "surface_i.csv")
    assert rows[0][:2] == ["own", "rivals_0"]
    for own, rivals in [(0, 0), (4, 2), (10, 3), (5, 8)]:
        expected = utility(ex1, 0, (own, rivals)) - own
        assert float(rows[own + 1][rivals + 1]) == pytest.approx(expected)
    assert rows[11][5] == ""  # 10 + 4 > 13


def test_solve_example1(tmp_path, capsys):
    assert main(["solve", "--scenario", "example1", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "solve.json").read_text())
    assert report["pure_nash"] == [[2, 1]]
    assert report["iesds_survivors"] == [[2, 1]]
    assert report["nash_outcome"] == pytest.approx([6.57, 12.33], abs=0.005)
    assert (report["nash_total"], report["optimum_total"], report["gap"]) == (3, 2, 1)
    assert report["social_optimum"] == [1, 1]
    assert "6.57, 12.33" in capsys.readouterr().out
    assert (tmp_path / "solve.txt").read_text().startswith("scenario")


def test_solve_single_seller(tmp_path):
    market = Market((SellerState.uniform("solo", 3, 0.4),), 12, 1.5)
    path = write_scenario(tmp_path, market, budget=0.5)
    assert main(["solve", "--scenario", str(path), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "solve.json").read_text())
    assert len(report["pure_nash"]) == 1
    assert report["gap"] == 0
    assert report["greedy"]["solo"]["cost"] == pytest.approx(0.5)


def test_solve_deterministic(tmp_path):
    market = random_market(np.random.default_rng(4), max_sellers=3, max_buyers=25)
    path = write_scenario(tmp_path, market)
    outs = []
    for n in range(2):
        out = tmp_path / f"run{n}"
        assert main(["solve", "--scenario", str(path), "--out", str(out), "--seed", "11"]) == 0
        outs.append(((out / "solve.json").read_bytes(), (out / "solve.txt").read_bytes()))
    assert outs[0] == outs[1]


def test_solve_nonconvergence_exit_code(tmp_path):
    rng = np.random.default_rng(0)
    while True:
        market = random_market(rng)
        try:
            first_order_profile(market)
        except NonConvergenceError:
            break
    path = write_scenario(tmp_path, market)
    assert main(["solve", "--scenario", str(path), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "solve.json").read_text())["first_order_profile"] is None
    assert main(["solve", "--scenario", str(path), "--out", str(tmp_path),
                 "--require-convergence"]) == 3


def test_size_bound_exit_code(tmp_path, monkeypatch):
    monkeypatch.setenv("BRIBERY_MAX_PROFILES", "10")
    assert main(["matrix", "--scenario", "example1", "--out", str(tmp_path)]) == 4
    assert main(["simulate", "--scenario", "example1", "--out", str(tmp_path)]) == 4


def test_simulate_example1(tmp_path):
    assert main(["simulate", "--scenario", "example1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "trace.csv")
    assert rows[0] == ["slot", "arrivals", "count_i", "count_j", "utility_i", "utility_j", "potential"]
    assert rows[1][:4] == ["0", "0", "2", "1"]


def test_simulate_zero_slots(tmp_path):
    assert main(["simulate", "--scenario", "example1", "--out", str(tmp_path), "--slots", "0"]) == 0
    assert len(read_csv(tmp_path / "trace.csv")) == 1


def test_simulate_seed_reproducible(tmp_path):
    market = random_market(np.random.default_rng(9), max_sellers=2, max_buyers=20)
    path = tmp_path / "sc.yaml"
    text = dump_scenario(Scenario("sc", market, caps=(2,) * market.size, order=tuple(range(market.size)),
                                  beliefs=()))
    path.write_text(text.replace("rates: 0.0", "rates: [1.0, 2.5]").replace("slots: 1", "slots: 5"))
    runs = []
    for n in range(2):
        out = tmp_path / f"r{n}"
        assert main(["simulate", "--scenario", str(path), "--out", str(out), "--seed", "77"]) == 0
        runs.append((out / "trace.csv").read_bytes())
    assert runs[0] == runs[1]
    assert len(runs[0].splitlines()) == 6


def test_fairness_example1(tmp_path):
    assert main(["fairness", "--scenario", "example1", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "fairness.json").read_text())
    assert report["min_fair_raters"] == 4
    assert report["critical_point"]["roots"] == []
    assert report["critical_point"]["discriminant"] < 0
    assert report["critical_point"]["flag"] == "as-printed"


def test_fairness_requires_section(tmp_path):
    path = write_scenario(tmp_path, Market((SellerState.uniform("a", 2, 0.5),), 5, 1.0))
    assert main(["fairness", "--scenario", str(path), "--out", str(tmp_path)]) == 2


def test_calibrate(tmp_path):
    data = tmp_path / "obs.csv"
    rs = np.linspace(0.2, 1.0, 9).tolist()
    data.write_text("rating,reviews,installs\n"
                    + "".join(f"{r!r},{3 * r ** 2!r},{(3 * r ** 2) ** 1.5!r}\n" for r in rs)
                    + "0.5,,\n")
    assert main(["calibrate", "--data", str(data), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "calibrate.json").read_text())
    assert report["omega1"] == pytest.approx(3 ** 1.5)
    assert report["omega2"] == pytest.approx(3.0)
    assert report["dropped_reviews"] == 1


@pytest.mark.parametrize("text, fragment", [
    ("schema: 2\n", "schema"),
    ("schema: 1\nmarket:\n  total_buyers: 5\n  profit_per_purchase: 1\n  sellers:\n"
     "    - id: a\n      count: 2\n      mean: 1.4\n", ":8: market.sellers[0].mean"),
    ("schema: 1\nmarket:\n  total_buyers: 1\n  profit_per_purchase: 1\n  sellers:\n"
     "    - id: a\n      count: 2\n      mean: 0.4\n", "exceeds total_buyers"),
    ("schema: 1\nmarket:\n  total_buyers: 9\n  profit_per_purchase: 1\n  sellers:\n"
     "    - id: a\n      count: 2\n      mean: 0.4\norder: [b]\n", "order[0]: unknown seller"),
    ("schema: 1\nbogus: 3\n", "bogus: unknown field"),
])
def test_scenario_validation(text, fragment):
    with pytest.raises(ScenarioError, match=None) as info:
        parse_scenario(text, "x.yaml")
    assert fragment in str(info.value)


def test_cli_validation_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema: 1\nmarket: 3\n")
    assert main(["solve", "--scenario", str(bad), "--out", str(tmp_path)]) == 2
    assert "market" in capsys.readouterr().err
    assert main(["solve", "--scenario", "example1", "--out", str(tmp_path), "--caps", "1"]) == 2
    assert main(["matrix", "--scenario", "example1", "--out", str(tmp_path), "--surface", "zz"]) == 2


def test_scenario_round_trip():
    sc = load_scenario("example1")
    again = parse_scenario(dump_scenario(sc))
    assert again.market == sc.market
    assert again.caps == sc.caps and again.order == sc.order
    assert again.fairness == sc.fairness
