"""Inference problems: prior, observed data and paired simulators with distances.

A problem exposes three simulators, each taking the free parameter vector
and a numpy Generator:

* ``simulate_low``: the cheap model; its outcome carries the recorded noise.
* ``simulate_high``: the expensive model, coupled to a low-fidelity outcome.
* ``simulate_high_independent``: the expensive model on its own.

Each returns a :class:`SimOutcome` whose ``distance`` is compared with
``epsilon_lo`` or ``epsilon`` by the samplers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .abc_core import DistanceSpec, distance, repressilator_summary, viral_summary
from .mf_tuning import PerfEstimates
from .reaction_network import (Prior, Uniform, repressilator_model, repressilator_prior,
                               viral_model, viral_prior)
from .stochastic_sim import (CoupledPair, coupled_high_fi, hybrid_viral_simulate, ssa_simulate,
                             tau_leap_simulate)
from .streams import OBSERVED, IndexStreams


@dataclass
class SimOutcome:
    """Distance to the observed data and the cost of one simulation."""

    distance: float
    cost: float
    coupling: object = None
    summary: np.ndarray | None = None


EVENT_SECONDS = 1e-6


def charged_cost(traj, cost_model="wall", weight=1):
    """Cost of one simulation under ``cost_model``.

    ``"wall"`` uses the measured wall time.  ``"events"`` charges
    ``EVENT_SECONDS`` per simulated event (multiplied by ``weight``, e.g. the
    reaction count for a tau-leap step), which is reproducible across runs
    and machines.
    """
    if cost_model == "wall":
        return traj.cost
    if cost_model == "events":
        return max(traj.n_events * weight, 1) * EVENT_SECONDS
    raise ValueError(f"unknown cost model {cost_model!r}")


class Problem:
    """Base class; subclasses set the attributes below and the simulators."""

    name = "problem"
    prior: Prior
    epsilon: float
    epsilon_lo: float
    cost_model = "wall"

    @property
    def param_names(self):
        return self.prior.names

    def simulate_low(self, theta, rng) -> SimOutcome:
        raise NotImplementedError

    def simulate_high(self, theta, low: SimOutcome, rng) -> SimOutcome:
        raise NotImplementedError

    def simulate_high_independent(self, theta, rng) -> SimOutcome:
        raise NotImplementedError


class RepressilatorProblem(Problem):
    """Repressilator calibration of ``(n, K_h)``: tau-leap low fidelity, exact high fidelity.

    Summaries are all species counts at ``t = 0, ..., 10``; distances are
    Euclidean norms divided by the horizon.  Observed data are one exact
    simulation at the nominal parameters, drawn from the ``"observed"``
    stream of ``seed``.

    Args:
        seed: Master seed for the observed data.
        tau: Tau-leap step (the largest step when ``adapt > 0``).
        adapt: Relative-change bound for adaptive leaps; 0 gives fixed steps.
        epsilon: High-fidelity threshold.
        epsilon_lo: Low-fidelity threshold.
        observed: Precomputed observed summary (overrides ``seed``).
        parameters: Overrides of the nominal rate constants.
        cost_model: ``"wall"`` or ``"events"`` (see :func:`charged_cost`).
    """

    name = "repressilator"

    def __init__(self, seed=0, tau=0.1, epsilon=50.0, epsilon_lo=50.0, observed=None,
                 parameters=None, cost_model="wall", adapt=0.05):
        self.cost_model = cost_model
        self.adapt = float(adapt)
        self.net = repressilator_model()
        if parameters:
            self.net = type(self.net)(self.net.species, self.net.reactions,
                                      self.net.initial_state, self.net.t_final,
                                      self.net.resolve(parameters), self.net.name)
        prior = repressilator_prior()
        fixed = {k: self.net.parameters[k] for k in prior.fixed}
        self.prior = Prior(prior.components, fixed)
        self.tau = float(tau)
        self.epsilon = float(epsilon)
        self.epsilon_lo = float(epsilon_lo)
        self.spec = DistanceSpec(self.epsilon, self.net.t_final)
        self.spec_lo = DistanceSpec(self.epsilon_lo, self.net.t_final)
        self.save_times = np.arange(0.0, self.net.t_final + 0.5, 1.0)
        if observed is None:
            rng = IndexStreams(seed, OBSERVED)(0)
            traj = ssa_simulate(self.net, None, rng, save_times=self.save_times)
            observed = repressilator_summary(traj)
        self.observed = np.asarray(observed, dtype=float)

    def _params(self, theta):
        return self.prior.full_params(theta)

    def simulate_low(self, theta, rng):
        traj, skeleton = tau_leap_simulate(self.net, self._params(theta), self.tau, rng,
                                           save_times=self.save_times, adapt=self.adapt)
        s = repressilator_summary(traj)
        cost = charged_cost(traj, self.cost_model, self.net.reaction_count)
        return SimOutcome(distance(s, self.observed, self.spec_lo), cost,
                          CoupledPair(traj, skeleton), s)

    def simulate_high(self, theta, low, rng):
        traj = coupled_high_fi(low.coupling, self.net, self._params(theta), rng,
                               save_times=self.save_times)
        s = repressilator_summary(traj)
        return SimOutcome(distance(s, self.observed, self.spec),
                          charged_cost(traj, self.cost_model), None, s)

    def simulate_high_independent(self, theta, rng):
        traj = ssa_simulate(self.net, self._params(theta), rng, save_times=self.save_times)
        s = repressilator_summary(traj)
        return SimOutcome(distance(s, self.observed, self.spec),
                          charged_cost(traj, self.cost_model), None, s)


class ViralProblem(Problem):
    """Viral kinetics calibration of ``k1..k6`` on a population of cells.

    Each parameter vector is simulated in ``cells`` independent cells.  The
    low-fidelity model is the hybrid scheme; the high-fidelity model is
    exact and coupled cell by cell through the slow reactions' noise.

    Args:
        seed: Master seed for the observed data.
        cells: Population size.
        epsilon: High-fidelity threshold.
        epsilon_lo: Low-fidelity threshold.
        threshold: Virus count above which a cell counts as infected.
        observed: Precomputed observed summary (overrides ``seed``).
        prior_base: Spread of the log-uniform prior around the nominal values.
        cost_model: ``"wall"`` or ``"events"`` (see :func:`charged_cost`).
    """

    name = "viral"

    def __init__(self, seed=0, cells=10, epsilon=0.25, epsilon_lo=0.25, threshold=3.0,
                 observed=None, prior_base=1.5, cost_model="wall"):
        self.cost_model = cost_model
        self.net = viral_model()
        self.prior = viral_prior(prior_base)
        self.cells = int(cells)
        self.epsilon = float(epsilon)
        self.epsilon_lo = float(epsilon_lo)
        self.threshold = float(threshold)
        self.spec = DistanceSpec(self.epsilon, 1.0)
        self.spec_lo = DistanceSpec(self.epsilon_lo, 1.0)
        self.save_times = np.array([self.net.t_final])
        self.watch = ("virus", self.threshold)
        if observed is None:
            rng = IndexStreams(seed, OBSERVED)(0)
            trajs = [ssa_simulate(self.net, None, rng, save_times=self.save_times,
                                  watch=self.watch) for _ in range(self.cells)]
            observed = self._summary(trajs)
        self.observed = np.asarray(observed, dtype=float)

    def _summary(self, trajs):
        final = [t.final_state[3] for t in trajs]
        return viral_summary(final, [t.crossing for t in trajs], self.net.t_final,
                             self.threshold)

    def simulate_low(self, theta, rng):
        params = self.prior.full_params(theta)
        pairs = []
        for _ in range(self.cells):
            traj, process = hybrid_viral_simulate(self.net, params, rng,
                                                  save_times=self.save_times, watch=self.watch)
            pairs.append(CoupledPair(traj, process))
        s = self._summary([p.low_fi for p in pairs])
        cost = sum(charged_cost(p.low_fi, self.cost_model) for p in pairs)
        return SimOutcome(distance(s, self.observed, self.spec_lo), cost, pairs, s)

    def simulate_high(self, theta, low, rng):
        params = self.prior.full_params(theta)
        trajs = [coupled_high_fi(p, self.net, params, rng, save_times=self.save_times,
                                 watch=self.watch) for p in low.coupling]
        s = self._summary(trajs)
        return SimOutcome(distance(s, self.observed, self.spec), sum(charged_cost(t, self.cost_model) for t in trajs),
                          None, s)

    def simulate_high_independent(self, theta, rng):
        params = self.prior.full_params(theta)
        trajs = [ssa_simulate(self.net, params, rng, save_times=self.save_times,
                              watch=self.watch) for _ in range(self.cells)]
        s = self._summary(trajs)
        return SimOutcome(distance(s, self.observed, self.spec), sum(charged_cost(t, self.cost_model) for t in trajs),
                          None, s)


@dataclass
class BernoulliToy(Problem):
    """Synthetic problem with a prescribed joint law of the two accept decisions.

    The parameter is uniform on ``(-sqrt 3, sqrt 3)`` (zero mean, unit
    variance) and independent of the decisions, so the ABC posterior equals
    the prior.  The low-fidelity model accepts with probability
    ``p_tp + p_fp``; conditionally on that outcome the high-fidelity model
    accepts with probability ``p_tp / (p_tp + p_fp)`` or
    ``p_fn / (1 - p_tp - p_fp)``.  Costs are synthetic constants: the
    high-fidelity cost depends on the low-fidelity outcome so that the
    expected costs match ``c_p`` and ``c_n``.
    """

    p_tp: float = 0.10
    p_fp: float = 0.02
    p_fn: float = 0.03
    c_lo: float = 1.0
    c_p: float = 5.0
    c_n: float = 5.0
    prior: Prior = field(default_factory=lambda: Prior({"theta": Uniform(-math.sqrt(3.0),
                                                                          math.sqrt(3.0))}))
    epsilon: float = 1.0
    epsilon_lo: float = 1.0
    name: str = "bernoulli-toy"

    def __post_init__(self):
        if min(self.p_tp, self.p_fp, self.p_fn) < 0 or self.p_tp + self.p_fp + self.p_fn > 1:
            raise ValueError("rates must form a valid joint distribution")

    @property
    def p_lo(self):
        return self.p_tp + self.p_fp

    @property
    def acceptance(self):
        """High-fidelity acceptance probability ``p_tp + p_fn``."""
        return self.p_tp + self.p_fn

    @property
    def cost_hi_pos(self):
        return self.c_p / self.p_lo if self.p_lo > 0 else 0.0

    @property
    def cost_hi_neg(self):
        return self.c_n / (1.0 - self.p_lo) if self.p_lo < 1 else 0.0

    def estimates(self) -> PerfEstimates:
        return PerfEstimates(self.p_tp, self.p_fp, self.p_fn, self.c_p, self.c_n, self.c_lo)

    def simulate_low(self, theta, rng):
        accept = rng.random() < self.p_lo
        return SimOutcome(0.0 if accept else 2.0, self.c_lo, accept)

    def simulate_high(self, theta, low, rng):
        if low.coupling:
            p = self.p_tp / self.p_lo
            cost = self.cost_hi_pos
        else:
            p = self.p_fn / (1.0 - self.p_lo) if self.p_lo < 1 else 0.0
            cost = self.cost_hi_neg
        return SimOutcome(0.0 if rng.random() < p else 2.0, cost)

    def simulate_high_independent(self, theta, rng):
        accept = rng.random() < self.acceptance
        return SimOutcome(0.0 if accept else 2.0, self.c_p + self.c_n)
