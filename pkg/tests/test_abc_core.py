"""Summaries, distances, weights and weighted samples."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfabc.abc_core import (CASES, Case, DistanceSpec, EstimationError, WeightedSample,
                            WeightRecord, case_of, distance, ess, estimate, estimate_from,
                            repressilator_summary, viral_summary, weight_early_decision,
                            weight_early_rejection, weight_multifidelity, weight_plain)

unit = st.floats(0.0, 1.0, exclude_max=True)
eta = st.floats(0.01, 1.0)


def never():
    raise AssertionError("high-fidelity model must not run")


# ---------------------------------------------------------------------------
# summaries and distances


def test_distance_identical_is_zero():
    v = np.arange(66.0)
    assert distance(v, v, DistanceSpec(50, 10)) == 0.0


def test_distance_one_coordinate_scaled_by_horizon():
    a = np.zeros(66)
    b = a.copy()
    b[17] = 10
    assert distance(a, b, DistanceSpec(50, 10)) == pytest.approx(1.0)


def test_distance_viral_unscaled():
    assert distance([1, 1, 0], [0, 0, 0], DistanceSpec(0.25)) == pytest.approx(math.sqrt(2))


def test_distance_shape_mismatch():
    with pytest.raises(ValueError):
        distance([1, 2], [1, 2, 3], DistanceSpec(1))


@pytest.mark.parametrize("eps,scale", [(0, 1), (-1, 1), (1, 0)])
def test_distance_spec_validation(eps, scale):
    with pytest.raises(ValueError):
        DistanceSpec(eps, scale)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3),
       st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_distance_symmetric_non_negative(a, b):
    spec = DistanceSpec(1.0, 2.0)
    d = distance(a, b, spec)
    assert d >= 0 and d == pytest.approx(distance(b, a, spec))


def test_repressilator_summary_flattens_time_major():
    class T:
        states = np.arange(66).reshape(11, 6)
    s = repressilator_summary(T)
    assert s.shape == (66,) and s[6] == 6


def test_viral_summary_values():
    s = viral_summary([0, 8, 2, 8], [np.nan, 50, np.nan, 150], 200.0, 3.0)
    assert s == pytest.approx([0.5, 3.0, 0.5])


def test_viral_summary_zero_when_uninfected():
    assert np.array_equal(viral_summary([0, 1, 3], [np.nan] * 3, 200.0), np.zeros(3))


# ---------------------------------------------------------------------------
# weights


@pytest.mark.parametrize("d,expected", [(49.9, 1), (50.0, 0), (120.0, 0)])
def test_weight_plain(d, expected):
    assert weight_plain(d, 50.0) == expected


def test_early_rejection_cases():
    assert weight_early_rejection(1, 0.7, 0.5, never) == (0.0, False)
    assert weight_early_rejection(0, 0.2, 0.5, lambda: 1) == (2.0, True)


def test_early_decision_cases():
    assert weight_early_decision(1, 0.7, 0.5, never) == (1.0, False)
    assert weight_early_decision(1, 0.2, 0.5, lambda: 0) == (-1.0, True)
    assert weight_early_decision(1, 0.2, 0.5, lambda: 1) == (1.0, True)


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.5])
def test_eta_range_checked(bad):
    with pytest.raises(ValueError):
        weight_multifidelity(1, 0.5, bad, 0.5, lambda: 1)
    with pytest.raises(ValueError):
        weight_early_rejection(1, 0.5, bad, lambda: 1)


def test_multifidelity_early_accept():
    r = weight_multifidelity(1, 0.9, 0.3, 0.3, never)
    assert r.w == 1 and r.case is Case.EARLY_ACCEPT and not r.checked


def test_multifidelity_paper_weight_values():
    fp = weight_multifidelity(1, 0.1, 0.161, 0.048, lambda: 0)
    fn = weight_multifidelity(0, 0.01, 0.161, 0.048, lambda: 1)
    assert fp.case is Case.FALSE_POSITIVE and fn.case is Case.FALSE_NEGATIVE
    assert fp.w == pytest.approx(1 - 1 / 0.161)
    assert fn.w == pytest.approx(1 / 0.048)
    assert abs(fp.w - (-5.22)) < 0.05 and abs(fn.w - 20.82) < 0.05


@given(st.integers(0, 1), unit, eta, eta, st.integers(0, 1))
def test_multifidelity_value_set(wt, u, e1, e2, wh):
    r = weight_multifidelity(wt, u, e1, e2, lambda: wh)
    allowed = {0.0, 1.0, 1 - 1 / e1, 1 / e2}
    assert any(r.w == pytest.approx(a) for a in allowed)
    assert r.case is case_of(wt, r.checked, wh if r.checked else None)


@given(st.integers(0, 1), unit, eta, st.integers(0, 1))
def test_equal_etas_reproduce_early_decision(wt, u, e, wh):
    r = weight_multifidelity(wt, u, e, e, lambda: wh)
    w, used = weight_early_decision(wt, u, e, lambda: wh)
    assert r.w == w and r.checked == used


@given(st.integers(0, 1), unit, eta, st.integers(0, 1))
def test_unit_eta1_reproduces_early_rejection(wt, u, e2, wh):
    r = weight_multifidelity(wt, u, 1.0, e2, lambda: wh)
    w, used = weight_early_rejection(wt, u, 1.0 if wt else e2, lambda: wh)
    assert r.w == pytest.approx(w) and r.checked == used


@given(st.integers(0, 1), unit, st.integers(0, 1))
def test_unit_etas_reproduce_plain(wt, u, wh):
    assert weight_multifidelity(wt, u, 1.0, 1.0, lambda: wh).w == wh


def test_case_labels():
    assert [c.value for c in CASES] == ["early-accept", "early-reject", "checked-TP",
                                        "checked-TN", "checked-FP", "checked-FN", "plain"]
    assert case_of(0, False, None) is Case.EARLY_REJECT
    assert case_of(0, True, 0) is Case.TRUE_NEGATIVE
    assert case_of(1, True, 1) is Case.TRUE_POSITIVE


def test_unbiased_weights_on_bernoulli_pairs():
    """All four weights have mean P(high-fidelity accept) = 0.13."""
    rng = np.random.default_rng(2024)
    n = 100_000
    p_tp, p_fp, p_fn = 0.10, 0.02, 0.03
    r = rng.random(n)
    wt = (r < p_tp + p_fp).astype(int)
    wh = ((r < p_tp) | ((r >= p_tp + p_fp) & (r < p_tp + p_fp + p_fn))).astype(int)
    u = rng.random(n)
    e1, e2 = 0.4, 0.3
    w = wh.astype(float)
    w_er = np.where(u < e2, wh / e2, 0.0)
    w_ed = wt + (u < e2) * (wh - wt) / e2
    w_mf = np.array([weight_multifidelity(a, b, e1, e2, lambda h=h: h).w
                     for a, b, h in zip(wt, u, wh)])
    for x in (w, w_er, w_ed, w_mf):
        assert abs(x.mean() - 0.13) < 3 * x.std() / math.sqrt(n)
    assert np.mean(w**2) == pytest.approx(np.mean(w))


# ---------------------------------------------------------------------------
# ESS and estimates


@pytest.mark.parametrize("w,expected", [([1] * 10, 10), ([1, 1, 0, 0], 2), ([1, -1, 1, 1], 1),
                                        ([0, 0], 0)])
def test_ess_examples(w, expected):
    assert ess(w) == pytest.approx(expected)


@pytest.mark.parametrize("w,f,expected", [([1, 1, 1], [1, 2, 6], 3), ([1, 0], [5, 9], 5),
                                          ([1, -1, 1], [2, 4, 6], 4)])
def test_estimate_examples(w, f, expected):
    assert estimate_from(w, f) == pytest.approx(expected)


def test_estimate_zero_weight_fails():
    with pytest.raises(EstimationError):
        estimate_from([0, 0], [1, 2])
    with pytest.raises(EstimationError):
        estimate_from([1, -1], [1, 2])


def _sample():
    recs = [WeightRecord(1.0, 1, -1, Case.EARLY_ACCEPT, 0.5, 0.8, 0, np.array([1.0, 2.0]), 0.1, 0.0),
            WeightRecord(-1.5, 1, 0, Case.FALSE_POSITIVE, 0.4, 0.1, 1, np.array([3.0, 4.0]), 0.1, 2.0),
            WeightRecord(4.0, 0, 1, Case.FALSE_NEGATIVE, 0.25, 0.1, 2, np.array([5.0, 6.0]), 0.2, 3.0),
            WeightRecord(0.0, 0, -1, Case.EARLY_REJECT, 0.25, 0.9, 3, np.array([7.0, 8.0]), 0.2, 0.0)]
    return WeightedSample.from_records(recs, ("a", "b"))


def test_weighted_sample_derived_quantities():
    s = _sample()
    assert len(s) == 4
    assert s.total_cost == pytest.approx(0.1 + 2.1 + 3.2 + 0.2)
    assert s.ess == pytest.approx(3.5**2 / (1 + 2.25 + 16))
    assert s.z_hat == pytest.approx(3.5 / 4)
    assert s.case_counts()["checked-FP"] == 1
    assert estimate(s, lambda th: th[0]) == pytest.approx((1 - 4.5 + 20) / 3.5)
    assert s.record(2).case is Case.FALSE_NEGATIVE


def test_weighted_sample_csv_round_trip(tmp_path):
    s = _sample()
    path = tmp_path / "samples.csv"
    s.to_csv(path)
    assert path.read_text().splitlines()[0] == "index,a,b,w,w_tilde,case,cost_lo,cost_hi"
    back = WeightedSample.from_csv(path)
    assert np.array_equal(back.w, s.w) and np.array_equal(back.theta, s.theta)
    assert np.array_equal(back.case, s.case) and np.array_equal(back.w_high, s.w_high)
    assert np.array_equal(back.cost_hi, s.cost_hi)


def test_summary_json(tmp_path):
    import json
    s = _sample()
    path = tmp_path / "summary.json"
    s.write_summary(path, {"a": lambda th: th[0], "zero": lambda th: 0.0})
    data = json.loads(path.read_text())
    assert data["n"] == 4 and data["ess"] == pytest.approx(s.ess)
    assert set(data) >= {"T_tot", "Z_hat", "case_counts", "mu_abc"}
