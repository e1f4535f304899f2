"""Shared fixtures."""

import os
from pathlib import Path

import numpy as np
import pytest

from mfabc.mf_tuning import PerfEstimates
from mfabc.reaction_network import Reaction, ReactionNetwork

CACHE = Path(os.environ.get("MFABC_CACHE", Path(__file__).resolve().parent.parent / ".cache"))


@pytest.fixture
def toy_estimates():
    """Rates and costs with a known interior optimum near (0.1491, 0.1491)."""
    return PerfEstimates(p_tp=0.10, p_fp=0.01, p_fn=0.01, c_p=5.0, c_n=5.0, c_lo=1.0)


def birth_death(k_birth=10.0, k_death=1.0, x0=5, t_final=5.0):
    reactions = (Reaction({}, {"X": 1}, "kb", label="birth"),
                 Reaction({"X": 1}, {}, "kd", label="death"))
    return ReactionNetwork(("X",), reactions, (x0,), t_final, {"kb": k_birth, "kd": k_death},
                           name="birth-death")


@pytest.fixture
def bd_net():
    return birth_death()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
