"""Benchmark tables, replay and the efficiency, variance and burn-in studies."""

import csv

import numpy as np
import pytest

from mfabc.mf_tuning import ContinuationProbs, optimal_eta
from mfabc.problems import BernoulliToy
from mfabc.samplers import CampaignSpec, FixedEta, StopRule, run_multifidelity
from mfabc.experiments import (PLOT_COLUMNS, BenchmarkTable, burn_in_study, efficiency,
                               efficiency_study, exceedance, generate_benchmark,
                               repressilator_functions, replay, standard_settings,
                               variance_study, write_plot_data)


@pytest.fixture(scope="module")
def toy():
    return BernoulliToy(p_tp=0.10, p_fp=0.01, p_fn=0.01, c_lo=1.0, c_p=5.0, c_n=5.0)


@pytest.fixture(scope="module")
def table(toy):
    return generate_benchmark(toy, 20_000, seed=1)


def test_table_columns_and_rates(table, toy):
    assert len(table) == 20_000
    assert np.array_equal(table.index, np.arange(20_000))
    est = table.estimates()
    assert est.p_tp == pytest.approx(0.10, abs=0.01)
    assert est.p_fp == pytest.approx(0.01, abs=0.004)
    assert est.c_lo == 1.0


def test_table_csv_round_trip(tmp_path, table):
    path = tmp_path / "bench.csv"
    table.subset(np.arange(50)).to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "index,theta,d_lo,d_hi,cost_lo,cost_hi,w_lo,w_hi,u"
    back = BenchmarkTable.from_csv(path)
    ref = table.subset(np.arange(50))
    for name in ("theta", "d_lo", "d_hi", "cost_lo", "cost_hi", "w_lo", "w_hi", "u", "index"):
        assert np.array_equal(getattr(back, name), getattr(ref, name))
    assert back.param_names == ("theta",)


def test_generation_independent_of_workers(toy):
    a = generate_benchmark(toy, 300, seed=4, workers=1)
    b = generate_benchmark(toy, 300, seed=4, workers=2)
    assert np.array_equal(a.u, b.u) and np.array_equal(a.w_hi, b.w_hi)


def test_replay_matches_live_campaign(toy, table):
    spec = CampaignSpec(toy, FixedEta(0.3, 0.2), StopRule(n=2000), seed=1,
                        namespace="benchmark")
    live = run_multifidelity(spec).sample
    w, cost, checked = replay(table, 0.3, 0.2, rows=np.arange(2000))
    assert np.array_equal(w, live.w)
    assert np.allclose(cost, live.costs)
    assert np.array_equal(checked, live.w_high >= 0)


def test_replay_unit_probabilities_is_high_fidelity(table):
    w, cost, checked = replay(table, 1.0, 1.0)
    assert np.array_equal(w, table.w_hi.astype(float))
    assert checked.all()
    assert np.allclose(cost, table.cost_lo + table.cost_hi)


def test_efficiency_value():
    assert efficiency([1, 1, 0, 0], [1.0, 1.0, 1.0, 1.0]) == pytest.approx(0.5)


def test_exceedance_self_is_half():
    rng = np.random.default_rng(0)
    a = rng.random(200)
    assert exceedance(a, a) == pytest.approx(0.5)
    assert exceedance(a, a, paired=True) == 0.5
    assert exceedance(a + 10, a) == 1.0
    assert exceedance([1, 2], [2, 1], paired=True) == 0.5


def test_exceedance_disjoint_subsamples_near_half(table):
    settings = {"a": ContinuationProbs(0.3, 0.3), "b": ContinuationProbs(0.3, 0.3)}
    study = efficiency_study(table, settings, subsample=200, repeats=100)
    assert study.p_exceeds("a", "b") == pytest.approx(0.5)
    study = efficiency_study(table.subset(np.arange(10_000)), settings, 100, 50)
    half1 = study.efficiencies[0, :25]
    half2 = study.efficiencies[0, 25:]
    assert abs(exceedance(half1, half2) - 0.5) < 0.2


def test_standard_settings(table):
    s = standard_settings(table.estimates())
    assert set(s) == {"early accept/reject", "early decision", "early rejection", "rejection",
                      "-/-", "-/+", "+/-", "+/+"}
    assert s["rejection"].pair == (1.0, 1.0)
    assert s["early rejection"].eta1 == 1.0
    assert s["early decision"].eta1 == s["early decision"].eta2


def test_efficiency_study_orders_settings(table):
    study = efficiency_study(table, subsample=1000, repeats=20)
    assert study.efficiencies.shape == (8, 20)
    assert study.median("early accept/reject") > study.median("early rejection")
    assert study.median("early rejection") > study.median("rejection")
    assert study.p_exceeds("early accept/reject", "rejection") > 0.9
    with pytest.raises(ValueError):
        efficiency_study(table, subsample=1000, repeats=21)


def test_variance_study_reduces_variance(table):
    funcs = {"theta": lambda th: th[0], "constant": lambda th: 1.0}
    study = variance_study(table, funcs, budget=3000.0, repeats=100, seed=0)
    const = [r for r in study.rows if r["F"] == "constant"]
    assert all(r["variance"] == pytest.approx(0.0, abs=1e-20) for r in const)
    best = study.get("theta", "early accept/reject")
    assert best["reduction"] > 0.15
    assert study.get("theta", "rejection")["reduction"] == 0.0
    assert study.spearman("theta") > 0.7


def test_variance_study_budget_validation(table):
    with pytest.raises(ValueError):
        variance_study(table, {"theta": lambda th: th[0]}, budget=1.0, repeats=2)


def test_variance_study_deterministic(table):
    funcs = {"theta": lambda th: th[0]}
    a = variance_study(table, funcs, budget=500.0, repeats=10, seed=3)
    b = variance_study(table, funcs, budget=500.0, repeats=10, seed=3)
    assert [r["variance"] for r in a.rows] == [r["variance"] for r in b.rows]


def test_burn_in_study_floor_sitting():
    toy = BernoulliToy(p_tp=0.10, p_fp=0.0005, p_fn=0.0005)
    table = generate_benchmark(toy, 4000, seed=2)
    study = burn_in_study(table, burn_in=100, phase=300, repeats=10)
    sitting = study.floor_sitting()
    assert sitting.any()
    assert all(("no-false-positive" in f) == s for f, s in zip(study.flags, sitting[:, 0])
               if "degenerate" not in f)
    with pytest.raises(ValueError):
        burn_in_study(table, burn_in=1000, phase=1000, repeats=3)


def test_repressilator_functions():
    f = repressilator_functions()
    th = np.array([2.0, 20.0])
    assert f["F1"](th) == 1.0 and f["F2"](th) == 1.0 and f["F3"](th) == 2.0
    assert f["F2_narrow"](th) == 0.0 and f["F2_narrow"](np.array([1.3, 20.0])) == 1.0


def test_write_plot_data(tmp_path, table):
    sub = table.subset(np.arange(4000))
    eff = efficiency_study(sub, subsample=200, repeats=10)
    var = variance_study(sub, {"theta": lambda th: th[0]}, budget=300.0, repeats=5)
    burn = burn_in_study(sub, 100, 200, 5)
    out = write_plot_data(tmp_path, sub, eff, var, burn)
    assert set(out.files) == set(PLOT_COLUMNS) | {"exceedance.csv"}
    with open(out.files["fig1_distances.csv"], newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4000 and set(rows[0]) == {"d_lo", "d_hi", "w_lo", "w_hi", "class"}
    with open(out.files["exceedance.csv"], newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 9
