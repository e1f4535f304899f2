"""Reaction networks, propensities and priors."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from scipy.integrate import trapezoid
from hypothesis import strategies as st

from mfabc._kernels import propensities
from mfabc.reaction_network import (LogScaledUniform, ParamVector, Prior, Reaction,
                                    ReactionNetwork, Uniform, hill_repression, repressilator_model,
                                    repressilator_prior, sample_prior, viral_model, viral_prior)


def test_hill_repression_values():
    assert hill_repression(0.0, 20.0, 2.0) == 1.0
    assert hill_repression(20.0, 20.0, 2.0) == pytest.approx(0.5)
    assert hill_repression(40.0, 20.0, 2.0) == pytest.approx(0.2)
    # huge repressor counts do not overflow
    assert hill_repression(1e300, 1.0, 4.0) == 0.0


def test_repressilator_structure():
    net = repressilator_model()
    assert net.species == ("m1", "m2", "m3", "p1", "p2", "p3")
    assert net.reaction_count == 12
    assert tuple(net.x0) == (0, 0, 0, 40, 20, 60)
    assert net.t_final == 10.0
    nu = net.stoich
    assert nu.shape == (6, 12)
    # transcription of m1 is repressed by p3, m2 by p1, m3 by p2
    law = net.rate_law()
    assert list(law.hill_species[:3]) == [5, 3, 4]


def test_repressilator_nominal_propensity():
    net = repressilator_model()
    x = np.array([2, 0, 1, 40, 20, 60])
    a = net.propensity(x)
    f = lambda p: 1.0 / (1.0 + (p / 20.0) ** 2)  # noqa: E731
    expect = [1 + 1000 * f(60), 1 + 1000 * f(40), 1 + 1000 * f(20), 2, 0, 1, 10, 0, 5,
              200, 100, 300]
    assert np.allclose(a, expect)


def test_compiled_propensity_matches_reference():
    rng = np.random.default_rng(0)
    for net in (repressilator_model(), viral_model()):
        law = net.rate_law().as_tuple()
        out = np.empty(net.reaction_count)
        for _ in range(50):
            x = rng.integers(0, 200, size=net.species_count)
            propensities(x.astype(np.int64), *law, out)
            assert np.allclose(out, net.propensity(x), rtol=1e-12)


def test_dimerisation_uses_pair_count():
    net = ReactionNetwork(("A", "B"), (Reaction({"A": 2}, {"B": 1}, 0.5),), (10, 0), 1.0)
    assert net.propensity([10, 0])[0] == pytest.approx(0.5 * 45)
    assert list(net.stoich[:, 0]) == [-2, 1]


def test_viral_structure():
    net = viral_model()
    assert net.species == ("template", "genome", "struct", "virus")
    assert list(net.fast_mask) == [False, False, True, False, True, False]
    assert net.resolve()["k6"] == 7.5e-5
    assert tuple(net.x0) == (1, 0, 0, 0)


@pytest.mark.parametrize("kwargs", [
    {"initial_state": (1, 2)},
    {"initial_state": (-1,)},
    {"t_final": 0.0},
])
def test_network_validation(kwargs):
    base = dict(species=("X",), reactions=(Reaction({}, {"X": 1}, 1.0),), initial_state=(0,),
                t_final=1.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        ReactionNetwork(**base)


def test_unknown_species_and_missing_parameter():
    with pytest.raises(ValueError):
        ReactionNetwork(("X",), (Reaction({"Y": 1}, {}, 1.0),), (0,), 1.0)
    net = ReactionNetwork(("X",), (Reaction({}, {"X": 1}, "k"),), (0,), 1.0)
    with pytest.raises(KeyError):
        net.rate_law()
    with pytest.raises(ValueError):
        net.rate_law({"k": -1.0})


def test_dict_roundtrip():
    for net in (repressilator_model(), viral_model()):
        back = ReactionNetwork.from_dict(net.to_dict())
        assert back.to_dict() == net.to_dict()
        assert np.array_equal(back.stoich, net.stoich)


def test_param_vector():
    p = ParamVector(("a", "b"), [1.0, 2.0])
    assert p["b"] == 2.0
    assert p.as_dict() == {"a": 1.0, "b": 2.0}
    with pytest.raises(ValueError):
        ParamVector(("a",), [1.0, 2.0])


@given(st.floats(-5, 5), st.floats(0.01, 10))
@settings(max_examples=50, deadline=None)
def test_uniform_density_integrates_to_one(low, width):
    d = Uniform(low, low + width)
    assert d.density(d.mean()) * (d.high - d.low) == pytest.approx(1.0)
    assert d.density(low - 1.0) == 0.0


@pytest.mark.parametrize("base", [1.5, 2.0, 10.0])
def test_log_scaled_uniform_moments(base):
    d = LogScaledUniform(3.0, base)
    rng = np.random.default_rng(7)
    x = np.array([d.sample(rng) for _ in range(40000)])
    lo, hi = d.support()
    assert x.min() >= lo and x.max() <= hi
    assert abs(x.mean() - d.mean()) < 4 * math.sqrt(d.var() / len(x))
    # density integrates to one
    grid = np.linspace(lo, hi, 20001)
    dens = np.array([d.density(v) for v in grid])
    assert trapezoid(dens, grid) == pytest.approx(1.0, rel=1e-3)


def test_priors():
    pr = repressilator_prior()
    assert pr.names == ("n", "K_h")
    draws = pr.sample_many(np.random.default_rng(0), 2000)
    assert draws[:, 0].min() >= 1 and draws[:, 0].max() <= 4
    assert draws[:, 1].min() >= 10 and draws[:, 1].max() <= 30
    full = pr.full_params(draws[0])
    assert full["alpha"] == 1000.0 and full["n"] == draws[0, 0]
    assert pr.density([2.0, 20.0]) == pytest.approx(1 / 60)
    assert pr.density([5.0, 20.0]) == 0.0
    vp = viral_prior(1.5)
    assert len(vp.names) == 6
    theta = sample_prior(vp, np.random.default_rng(1))
    for name, v in zip(theta.names, theta.values):
        lo, hi = vp.components[name].support()
        assert lo <= v <= hi


def test_prior_rejects_clash():
    with pytest.raises(ValueError):
        Prior({"a": Uniform(0, 1)}, {"a": 1.0})
