"""Simulators: exact, tau-leap, time-change, coupling and hybrid."""

import json
import math

import numpy as np
import pytest
from scipy import stats

from conftest import birth_death
from mfabc._kernels import cao_step
from mfabc.reaction_network import Reaction, ReactionNetwork, repressilator_model, viral_model
from mfabc.stochastic_sim import (CoupledPair, PoissonSkeleton, SimulationError, Trajectory,
                                  UnitPoissonProcess, complete_poisson, coupled_high_fi,
                                  hybrid_viral_simulate, hybrid_wait_time, map_to_exact,
                                  ssa_simulate, tau_leap_simulate)


def bd_terminal_law(kb, kd, x0, t):
    """Exact law of X(t): survivors Binomial(x0, e^-kd t) plus Poisson immigrants."""
    p = math.exp(-kd * t)
    lam = kb / kd * (1 - p)
    k = np.arange(0, 200)
    pmf = np.convolve(stats.binom.pmf(k, x0, p), stats.poisson.pmf(k, lam))[:200]
    return k, pmf


def chi_square_p(samples, k, pmf):
    obs = np.bincount(samples, minlength=len(k))[:len(k)]
    exp = pmf * len(samples)
    keep = exp > 5
    o, e = obs[keep], exp[keep]
    o = np.append(o, len(samples) - o.sum())
    e = np.append(e, len(samples) - e.sum())
    return stats.chisquare(o, e * o.sum() / e.sum()).pvalue


def test_ssa_birth_death_matches_exact_law(bd_net):
    rng = np.random.default_rng(0)
    x = np.array([ssa_simulate(bd_net, None, rng).final_state[0] for _ in range(3000)])
    k, pmf = bd_terminal_law(10.0, 1.0, 5, 5.0)
    assert chi_square_p(x, k, pmf) > 1e-3


def test_ssa_is_deterministic_per_seed():
    net = repressilator_model()
    a = ssa_simulate(net, None, 42)
    b = ssa_simulate(net, None, 42)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.states, b.states)


def test_saved_states_agree_with_full_path():
    net = repressilator_model()
    st = np.arange(11.0)
    full = ssa_simulate(net, None, 5)
    saved = ssa_simulate(net, None, 5, save_times=st)
    assert saved.sampled and saved.states.shape == (11, 6)
    assert np.array_equal(saved.states, full.at(st))
    assert full.times[0] == 0 and full.times[-1] == net.t_final


def test_zero_propensity_network_is_constant():
    net = ReactionNetwork(("X",), (Reaction({"X": 1}, {}, 1.0),), (0,), 3.0)
    traj = ssa_simulate(net, None, 1)
    assert traj.final_state[0] == 0
    low, sk = tau_leap_simulate(net, None, 0.1, 1)
    high = coupled_high_fi(CoupledPair(low, sk), net, None, 2)
    assert np.all(low.states == 0) and np.all(high.states == 0)


def test_watch_records_first_crossing():
    net = birth_death(k_birth=10.0, k_death=0.0, x0=0, t_final=10.0)
    traj = ssa_simulate(net, None, 3, watch=("X", 3))
    idx = np.argmax(traj.states[:, 0] > 3)
    assert traj.crossing == traj.times[idx]
    never = ssa_simulate(net, None, 3, watch=("X", 1e9))
    assert math.isnan(never.crossing)


@pytest.mark.parametrize("x0,kd,tau,adapt", [(3, 5.0, 1.0, 0.0), (40, 2.0, 0.3, 0.0),
                                             (40, 2.0, 0.3, 0.05), (200, 1.0, 1.0, 0.03)])
def test_tau_leap_skeleton_identity_and_nonnegativity(x0, kd, tau, adapt):
    """Recorded internal time per leap equals the leap length times the propensity before it."""
    net = birth_death(k_birth=1.0, k_death=kd, x0=x0, t_final=4.0)
    for seed in range(20):
        traj, sk = tau_leap_simulate(net, None, tau, seed, adapt=adapt)
        assert np.all(traj.states >= 0)
        n = len(sk.leap_taus)
        assert np.sum(sk.leap_taus) == pytest.approx(net.t_final)
        starts = traj.states[:n]
        for j in range(net.reaction_count):
            a = np.array([net.propensity(x)[j] for x in starts]) * sk.leap_taus
            assert np.allclose(sk.leap_lengths(j), a, rtol=1e-12, atol=1e-15)
        # net change of every leap equals the stoichiometry times the recorded counts
        counts = np.stack([sk.leap_counts(j) for j in range(net.reaction_count)])
        delta = (net.stoich @ counts).T
        assert np.array_equal(np.diff(traj.states[:n + 1], axis=0), delta)


def test_tau_leap_halving_happens():
    net = birth_death(k_birth=0.0, k_death=5.0, x0=3, t_final=4.0)
    halved = 0
    for seed in range(20):
        _, sk = tau_leap_simulate(net, None, 1.0, seed)
        halved += np.any(sk.leap_taus < 1.0)
    assert halved > 0


def test_tau_leap_rejects_bad_tau(bd_net):
    with pytest.raises(ValueError):
        tau_leap_simulate(bd_net, None, 0.0, 1)
    with pytest.raises(ValueError):
        tau_leap_simulate(bd_net, None, 0.1, 1, adapt=-0.1)


def test_adaptive_step_rule():
    """Pure death from 1000 at rate 1: mean change 1000, variance 1000, bound 0.05 * 1000."""
    x = np.array([1000], dtype=np.int64)
    stoich = np.array([[-1]], dtype=np.int64)
    a = np.array([1000.0])
    step = cao_step(x, stoich, a, np.ones(1), 0.05)
    assert step == pytest.approx(min(50 / 1000, 50**2 / 1000))
    # small counts: the bound is floored at one molecule
    step = cao_step(np.array([3], dtype=np.int64), stoich, np.array([3.0]), np.ones(1), 0.05)
    assert step == pytest.approx(1 / 3)


def test_adaptive_leaps_shorten_where_propensities_are_large():
    net = birth_death(k_birth=0.0, k_death=1.0, x0=2000, t_final=8.0)
    _, sk = tau_leap_simulate(net, None, 1.0, 4, adapt=0.05)
    # relative change 0.05 per step while counts are large, longer once they are small
    assert sk.leap_taus[0] == pytest.approx(0.05)
    assert sk.leap_taus.max() > 0.2
    _, fixed = tau_leap_simulate(net, None, 0.1, 4)
    assert np.allclose(fixed.leap_taus, 0.1)


def test_coupling_exact_with_adaptive_leaps(bd_net):
    rng = np.random.default_rng(12)
    x = []
    for _ in range(1500):
        low, sk = tau_leap_simulate(bd_net, None, 0.5, rng, adapt=0.1)
        x.append(coupled_high_fi(CoupledPair(low, sk), bd_net, None, rng).final_state[0])
    k, pmf = bd_terminal_law(10.0, 1.0, 5, 5.0)
    assert chi_square_p(np.array(x), k, pmf) > 1e-3


def test_map_constant_propensity_example():
    net = ReactionNetwork(("X",), (Reaction({}, {"X": 1}, 2.0),), (0,), 0.6)
    proc = UnitPoissonProcess.from_lists([[0.3, 1.0]], horizon=[1.5])
    traj = map_to_exact(proc, net, None)
    assert np.allclose(traj.times[1:3], [0.15, 0.5])
    assert list(traj.states[:3, 0]) == [0, 1, 2]


def test_map_death_process_example():
    net = ReactionNetwork(("X",), (Reaction({"X": 1}, {}, 1.0),), (2,), 5.0)
    proc = UnitPoissonProcess.from_lists([[0.4, 0.9]], horizon=[0.9])
    traj = map_to_exact(proc, net, None)
    assert np.allclose(traj.times[1:3], [0.2, 0.7])
    assert list(traj.states[:3, 0]) == [2, 1, 0]


def test_map_extends_exhausted_process(bd_net):
    traj = map_to_exact(UnitPoissonProcess.empty(2), bd_net, None, rng=4)
    assert traj.times[-1] == bd_net.t_final
    assert traj.n_events > 10


def test_time_change_reproduces_exact_law(bd_net):
    rng = np.random.default_rng(11)
    x = np.array([map_to_exact(UnitPoissonProcess.empty(2), bd_net, None, rng).final_state[0]
                  for _ in range(3000)])
    k, pmf = bd_terminal_law(10.0, 1.0, 5, 5.0)
    assert chi_square_p(x, k, pmf) > 1e-3


def test_complete_poisson_places_counts_in_pieces():
    sk = PoissonSkeleton.from_arrays([[0.5, 1.0, 0.25]], [[2, 0, 3]])
    proc = complete_poisson(sk, 3)
    t = proc.times[0]
    assert len(t) == 5 and np.all(np.diff(t) >= 0)
    assert np.sum(t < 0.5) == 2 and np.sum((t >= 1.5) & (t < 1.75)) == 3
    assert proc.horizon[0] == pytest.approx(1.75)


def test_complete_poisson_is_uniform_within_a_piece():
    sk = PoissonSkeleton.from_arrays([[2.0]], [[1]])
    pts = np.array([complete_poisson(sk, s).times[0][0] for s in range(3000)])
    assert stats.kstest(pts / 2.0, "uniform").pvalue > 1e-3


def test_skeleton_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        PoissonSkeleton.from_arrays([[1.0]], [[-1]])
    _, sk = tau_leap_simulate(birth_death(), None, 0.5, 1)
    sk.to_json(tmp_path / "sk.json")
    data = json.loads((tmp_path / "sk.json").read_text())
    assert set(data) >= {"D", "P"} and len(data["D"]) == 2


def test_coupled_pair_is_correlated_at_nominal():
    net = repressilator_model()
    rng = np.random.default_rng(2)
    lo, hi = [], []
    for _ in range(40):
        low, sk = tau_leap_simulate(net, None, 0.01, rng, save_times=[10.0])
        high = coupled_high_fi(CoupledPair(low, sk), net, None, rng, save_times=[10.0])
        lo.append(low.final_state[3])
        hi.append(high.final_state[3])
    assert stats.pearsonr(lo, hi).statistic > 0.5


def test_coupled_cost_and_flags():
    net = birth_death()
    low, sk = tau_leap_simulate(net, None, 0.1, 7)
    pair = CoupledPair(low, sk)
    high = coupled_high_fi(pair, net, None, 8)
    assert pair.coupled and pair.high_fi is high and high.cost > 0
    with pytest.raises(ValueError):
        coupled_high_fi(CoupledPair(low, None), net, None, 8)


def test_trajectory_csv(tmp_path):
    traj = ssa_simulate(birth_death(), None, 1, save_times=[0.0, 1.0, 2.0])
    traj.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,X" and len(lines) == 4


def test_trajectory_at():
    tr = Trajectory(np.array([0.0, 1.0, 2.5]), np.array([[0], [1], [2]]), 1.0)
    assert tr.at(0.5)[0] == 0 and tr.at(1.0)[0] == 1 and tr.at(9.0)[0] == 2


def test_hybrid_wait_examples():
    assert hybrid_wait_time(100, 2, 1, 0) == pytest.approx(-0.5 * math.log(1 - 0.02))
    assert hybrid_wait_time(100, 2, 1, 0) == pytest.approx(0.010101, abs=1e-6)
    assert math.isinf(hybrid_wait_time(100, 2, 1, 50))
    assert math.isinf(hybrid_wait_time(100, 2, 1, 49))  # |delta| = 1


def test_hybrid_viral_runs_and_couples():
    net = viral_model()
    rng = np.random.default_rng(5)
    infected = 0
    for _ in range(20):
        low, proc = hybrid_viral_simulate(net, None, rng, save_times=[200.0],
                                          watch=("virus", 3))
        assert np.all(low.states >= 0)
        assert proc.reaction_count == 6
        assert len(proc.times[2]) == 0 and len(proc.times[4]) == 0
        high = coupled_high_fi(CoupledPair(low, proc), net, None, rng, save_times=[200.0])
        assert np.all(high.states >= 0)
        infected += low.final_state[3] > 3
    assert infected > 0


def test_hybrid_struct_tracks_quasi_steady_mean():
    net = viral_model()
    low, _ = hybrid_viral_simulate(net, None, 3)
    k = net.resolve()
    template, struct = low.states[:, 0], low.states[:, 2]
    late = low.times > 50
    if np.any(late & (template > 0)):
        mean = k["k3"] * template[late] / k["k5"]
        assert np.median(np.abs(struct[late] - mean) / np.maximum(mean, 1)) < 0.5


def test_negative_guard_raises():
    err = SimulationError("x")
    assert isinstance(err, RuntimeError)
