"""Rejection, early accept/reject and adaptive multifidelity ABC campaigns.

All campaigns share one per-index recipe.  Index ``i`` draws from its own
stream (see :class:`~mfabc.streams.IndexStreams`), in this order:

1. the parameter from the prior,
2. the low-fidelity simulation,
3. the continuation uniform ``U``,
4. the coupled high-fidelity simulation, only when ``U < eta``.

A fixed-probability campaign and a ``(1, 1)`` campaign with the same seed
therefore see the same parameters, low-fidelity outcomes and uniforms, and
their decisions can be compared record by record.

Example:
    >>> from mfabc.problems import BernoulliToy
    >>> spec = CampaignSpec(BernoulliToy(), FixedEta(0.5, 0.5), StopRule(n=1000), seed=1)
    >>> result = run_multifidelity(spec)
    >>> len(result.sample)
    1000
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .abc_core import CASES, Case, WeightedSample, weight_multifidelity, weight_plain
from .mf_tuning import (DEFAULT_FLOORS, BurnInTally, ContinuationProbs, NotReady, PerfEstimates,
                        optimal_eta, optimal_eta_constrained, read_tuning_report)
from .problems import Problem
from .streams import CAMPAIGN, IndexStreams

log = logging.getLogger(__name__)

_CODE = {c: i for i, c in enumerate(CASES)}


@dataclass(frozen=True)
class FixedEta:
    eta1: float = 1.0
    eta2: float = 1.0


@dataclass(frozen=True)
class OptimalEta:
    """Continuation probabilities optimised from given estimates or a tuning report."""

    estimates: PerfEstimates | None = None
    report_path: str | None = None
    mode: str = "early_accept_reject"
    floors: tuple = DEFAULT_FLOORS

    def resolve(self) -> ContinuationProbs:
        if self.report_path is not None:
            return read_tuning_report(self.report_path)
        if self.estimates is None:
            raise ValueError("OptimalEta needs estimates or a report path")
        if self.mode == "early_accept_reject":
            return optimal_eta(self.estimates, self.floors)
        return optimal_eta_constrained(self.estimates, self.mode, self.floors)


@dataclass(frozen=True)
class AdaptiveEta:
    """Burn-in at ``(1, 1)`` followed by re-optimisation after every record.

    Attributes:
        burn_in: Gate value ``M``.
        floors: Lower bounds on ``(eta1, eta2)``.
        objective: ``"ess"`` or a function ``F(theta)`` whose estimate's
            variance is targeted.
        gate: ``"checked"`` to count records with both fidelities
            simulated, or ``"all"`` to count every record.
        freeze_after: Stop adapting once this many records exist and keep
            the last probabilities.  ``"default"`` means ``2 * burn_in``;
            ``None`` adapts until the end.
    """

    burn_in: int
    floors: tuple = DEFAULT_FLOORS
    objective: Union[str, Callable] = "ess"
    gate: str = "checked"
    freeze_after: Union[int, str, None] = "default"

    def __post_init__(self):
        if self.burn_in < 1:
            raise ValueError("burn_in must be positive")
        if self.gate not in ("checked", "all"):
            raise ValueError("gate must be 'checked' or 'all'")

    @property
    def freeze_at(self):
        if self.freeze_after == "default":
            return 2 * self.burn_in
        return self.freeze_after


EtaSource = Union[FixedEta, OptimalEta, AdaptiveEta]


@dataclass(frozen=True)
class StopRule:
    """Stop after ``n`` valid records or once the total cost reaches ``budget`` seconds."""

    n: int | None = None
    budget: float | None = None

    def __post_init__(self):
        if (self.n is None) == (self.budget is None):
            raise ValueError("give exactly one of n and budget")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be positive")
        if self.budget is not None and not self.budget > 0:
            raise ValueError("budget must be positive")


@dataclass
class CampaignSpec:
    """Everything that determines a campaign.

    Attributes:
        problem: Prior, observed data and simulators.
        eta: Source of the continuation probabilities.
        stop: Stop rule.
        seed: Master seed.
        namespace: Stream namespace; records draw from ``namespace/index-i``.
        coupling: Use the low-fidelity model and coupled high-fidelity
            simulations.  Without coupling only independent high-fidelity
            simulations are run (plain rejection ABC).
        workers: Processes for fixed-probability campaigns stopped by count.
        max_index: Safety limit on the number of indices tried.
    """

    problem: Problem
    eta: EtaSource = field(default_factory=FixedEta)
    stop: StopRule = field(default_factory=lambda: StopRule(n=1000))
    seed: int = 0
    namespace: str = CAMPAIGN
    coupling: bool = True
    workers: int = 1
    max_index: int | None = None


@dataclass
class CampaignResult:
    """Weighted sample plus the campaign's bookkeeping.

    Attributes:
        sample: Valid records in index order.
        eta: Continuation probabilities at the end of the campaign.
        eta_trace: Probabilities in force after each record, shape
            ``(n, 2)``.  Fixed campaigns repeat one pair; adaptive campaigns
            record every record from the gate onwards, frozen or not.
        gate_index: Position in ``sample`` of the record at which the
            adaptation gate first passed, or ``None``.
        timings: Seconds of low- and high-fidelity simulation and wall time.
        invalid_indices: Indices whose simulation failed.
        namespace: Stream namespace used.
    """

    sample: WeightedSample
    eta: ContinuationProbs
    eta_trace: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    gate_index: int | None = None
    timings: dict = field(default_factory=dict)
    invalid_indices: list = field(default_factory=list)
    namespace: str = CAMPAIGN

    @property
    def n_invalid(self):
        return len(self.invalid_indices)

    def stream_ids(self):
        label = "row" if self.namespace == "benchmark" else "index"
        return [f"{self.namespace}/{label}-{int(i)}" for i in self.sample.index]

    def manifest(self, spec: CampaignSpec | None = None) -> dict:
        out = {"n": len(self.sample), "ess": self.sample.ess, "T_tot": self.sample.total_cost,
               "Z_hat": self.sample.z_hat, "eta": [self.eta.eta1, self.eta.eta2],
               "eta_provenance": self.eta.provenance, "eta_flags": list(self.eta.flags),
               "eta_trace": self.eta_trace.tolist(), "gate_index": self.gate_index,
               "timings": self.timings, "n_invalid": self.n_invalid,
               "invalid_indices": [int(i) for i in self.invalid_indices],
               "case_counts": self.sample.case_counts(), "stream_namespace": self.namespace}
        if spec is not None:
            out["seed"] = spec.seed
            out["spec_hash"] = spec_hash(spec)
        return out


def spec_hash(spec: CampaignSpec) -> str:
    desc = {"problem": type(spec.problem).__name__, "eta": repr(spec.eta),
            "stop": repr(spec.stop), "seed": spec.seed, "namespace": spec.namespace,
            "coupling": spec.coupling,
            "observed": np.asarray(getattr(spec.problem, "observed", [])).tolist()}
    return hashlib.sha256(json.dumps(desc, sort_keys=True, default=str).encode()).hexdigest()


# ---------------------------------------------------------------------------
# per-index step


class _Columns:
    """Growable column store for records."""

    def __init__(self):
        self.theta, self.w, self.w_tilde, self.w_high, self.case = [], [], [], [], []
        self.cost_lo, self.cost_hi, self.eta, self.u, self.index = [], [], [], [], []

    def add(self, index, theta, rec, cost_lo, cost_hi):
        self.index.append(index)
        self.theta.append(theta)
        self.w.append(rec[0])
        self.w_tilde.append(rec[1])
        self.w_high.append(rec[2])
        self.case.append(rec[3])
        self.eta.append(rec[4])
        self.u.append(rec[5])
        self.cost_lo.append(cost_lo)
        self.cost_hi.append(cost_hi)

    def extend(self, other):
        for name in vars(self):
            getattr(self, name).extend(getattr(other, name))

    def __len__(self):
        return len(self.w)

    def sample(self, param_names) -> WeightedSample:
        p = len(param_names)
        theta = np.array(self.theta, dtype=float).reshape(len(self.theta), p)
        return WeightedSample(theta, np.array(self.w, float), np.array(self.w_tilde, np.int64),
                              np.array(self.w_high, np.int64), np.array(self.case, np.int64),
                              np.array(self.cost_lo, float), np.array(self.cost_hi, float),
                              np.array(self.eta, float), np.array(self.u, float),
                              np.array(self.index, np.int64), tuple(param_names))


def _step(problem: Problem, rng, eta1, eta2, coupling):
    """Simulate one index; returns ``(theta, record tuple, cost_lo, cost_hi)``."""
    theta = problem.prior.sample(rng).values
    if not coupling:
        high = problem.simulate_high_independent(theta, rng)
        w = weight_plain(high.distance, problem.epsilon)
        return theta, (float(w), -1, w, _CODE[Case.PLAIN], 1.0, math.nan), 0.0, high.cost
    low = problem.simulate_low(theta, rng)
    w_tilde = weight_plain(low.distance, problem.epsilon_lo)
    u = rng.random()
    spent = [0.0]

    def high_fi():
        high = problem.simulate_high(theta, low, rng)
        spent[0] = high.cost
        return weight_plain(high.distance, problem.epsilon)

    rec = weight_multifidelity(w_tilde, u, eta1, eta2, high_fi)
    return (theta, (rec.w, rec.w_tilde, rec.w_high, _CODE[rec.case], rec.eta, u), low.cost,
            spent[0])


_FAILURES = (ArithmeticError, RuntimeError, ValueError)


def _run_indices(problem, eta1, eta2, coupling, seed, namespace, start, stop):
    streams = IndexStreams(seed, namespace)
    cols = _Columns()
    invalid = []
    for i in range(start, stop):
        try:
            theta, rec, c_lo, c_hi = _step(problem, streams(i), eta1, eta2, coupling)
        except _FAILURES as exc:
            log.warning("index %d failed: %s", i, exc)
            invalid.append(i)
            continue
        cols.add(i, theta, rec, c_lo, c_hi)
    return cols, invalid


def _fixed_campaign(spec: CampaignSpec, eta: ContinuationProbs) -> CampaignResult:
    start_wall = time.perf_counter()
    problem = spec.problem
    cols = _Columns()
    invalid = []
    limit = spec.max_index
    if spec.stop.n is not None and spec.workers > 1:
        n = spec.stop.n
        bounds = np.linspace(0, n, spec.workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = [pool.submit(_run_indices, problem, eta.eta1, eta.eta2, spec.coupling,
                                   spec.seed, spec.namespace, int(a), int(b))
                       for a, b in zip(bounds[:-1], bounds[1:])]
            for fut in futures:
                c, bad = fut.result()
                cols.extend(c)
                invalid.extend(bad)
        next_index = n
    else:
        next_index = 0
    streams = IndexStreams(spec.seed, spec.namespace)
    total = float(np.sum(cols.cost_lo) + np.sum(cols.cost_hi))
    while True:
        if spec.stop.n is not None and len(cols) >= spec.stop.n:
            break
        if spec.stop.budget is not None and total >= spec.stop.budget:
            break
        if limit is not None and next_index >= limit:
            break
        i = next_index
        next_index += 1
        try:
            theta, rec, c_lo, c_hi = _step(problem, streams(i), eta.eta1, eta.eta2, spec.coupling)
        except _FAILURES as exc:
            log.warning("index %d failed: %s", i, exc)
            invalid.append(i)
            continue
        cols.add(i, theta, rec, c_lo, c_hi)
        total += c_lo + c_hi
    sample = cols.sample(problem.param_names)
    timings = {"low_fi": float(sample.cost_lo.sum()), "high_fi": float(sample.cost_hi.sum()),
               "wall": time.perf_counter() - start_wall}
    trace = np.tile([eta.eta1, eta.eta2], (len(sample), 1))
    return CampaignResult(sample, eta, trace, None, timings, invalid, spec.namespace)


def run_rejection(spec: CampaignSpec) -> CampaignResult:
    """Rejection ABC.

    With ``spec.coupling`` the low-fidelity model is run too and every
    index is checked, i.e. the ``(1, 1)`` multifidelity campaign; otherwise
    only independent high-fidelity simulations are run.  ``spec.eta`` is
    ignored.
    """
    return _fixed_campaign(spec, ContinuationProbs(1.0, 1.0, "fixed"))


def run_multifidelity(spec: CampaignSpec) -> CampaignResult:
    """Early accept/reject multifidelity ABC with fixed continuation probabilities."""
    if isinstance(spec.eta, FixedEta):
        eta = ContinuationProbs(spec.eta.eta1, spec.eta.eta2, "fixed")
    elif isinstance(spec.eta, OptimalEta):
        eta = spec.eta.resolve()
    else:
        raise TypeError("run_multifidelity needs FixedEta or OptimalEta; use run_adaptive")
    if not spec.coupling:
        raise ValueError("multifidelity campaigns need the low-fidelity model")
    return _fixed_campaign(spec, eta)


class AdaptiveController:
    """Tracks the burn-in tally and re-optimises ``(eta1, eta2)`` after each record."""

    def __init__(self, cfg: AdaptiveEta, tally: BurnInTally | None = None,
                 start=(1.0, 1.0)):
        self.cfg = cfg
        self.tally = tally if tally is not None else BurnInTally()
        self.eta1, self.eta2 = start
        self.flags = ()
        self.gate_index = None
        self.trace = []
        self.frozen = False
        self.weighted = callable(cfg.objective)

    def f_value(self, theta):
        return float(self.cfg.objective(theta)) if self.weighted else None

    def observe(self, position, w_tilde, w_high, cost_lo, cost_hi, w, f=None):
        tally = self.tally
        tally.update(w_tilde, w_high, cost_lo, cost_hi, w=w, f=f)
        if self.frozen:
            self.trace.append((self.eta1, self.eta2))
            return
        count = tally.k if self.cfg.gate == "checked" else tally.m
        if count < self.cfg.burn_in:
            return
        if self.gate_index is None:
            self.gate_index = position
        try:
            est = tally.estimates(weighted=self.weighted)
            cp = optimal_eta(est, self.cfg.floors, "adapted")
            self.eta1, self.eta2, self.flags = cp.eta1, cp.eta2, cp.flags
        except (NotReady, ValueError):
            pass
        self.trace.append((self.eta1, self.eta2))
        freeze = self.cfg.freeze_at
        if freeze is not None and tally.m >= freeze:
            self.frozen = True

    def probs(self) -> ContinuationProbs:
        prov = "adapted" if self.gate_index is not None else "fixed"
        return ContinuationProbs(self.eta1, self.eta2, prov, tuple(self.cfg.floors)
                                 if prov == "adapted" else (0.0, 0.0), self.flags)


def run_adaptive(spec: CampaignSpec) -> CampaignResult:
    """Adaptive multifidelity ABC: burn-in at ``(1, 1)``, then re-optimised probabilities."""
    cfg = spec.eta
    if not isinstance(cfg, AdaptiveEta):
        raise TypeError("run_adaptive needs an AdaptiveEta source")
    if not spec.coupling:
        raise ValueError("adaptive campaigns need the low-fidelity model")
    start_wall = time.perf_counter()
    problem = spec.problem
    ctl = AdaptiveController(cfg)
    streams = IndexStreams(spec.seed, spec.namespace)
    cols = _Columns()
    invalid = []
    total = 0.0
    i = 0
    while True:
        if spec.stop.n is not None and len(cols) >= spec.stop.n:
            break
        if spec.stop.budget is not None and total >= spec.stop.budget:
            break
        if spec.max_index is not None and i >= spec.max_index:
            break
        try:
            theta, rec, c_lo, c_hi = _step(problem, streams(i), ctl.eta1, ctl.eta2, True)
        except _FAILURES as exc:
            log.warning("index %d failed: %s", i, exc)
            invalid.append(i)
            i += 1
            continue
        cols.add(i, theta, rec, c_lo, c_hi)
        total += c_lo + c_hi
        ctl.observe(len(cols) - 1, rec[1], rec[2], c_lo, c_hi, rec[0], ctl.f_value(theta))
        i += 1
    sample = cols.sample(problem.param_names)
    timings = {"low_fi": float(sample.cost_lo.sum()), "high_fi": float(sample.cost_hi.sum()),
               "wall": time.perf_counter() - start_wall}
    trace = np.array(ctl.trace, dtype=float).reshape(-1, 2)
    return CampaignResult(sample, ctl.probs(), trace, ctl.gate_index, timings, invalid,
                          spec.namespace)


def run_campaign(spec: CampaignSpec) -> CampaignResult:
    """Dispatch on the type of ``spec.eta``."""
    if not spec.coupling:
        return run_rejection(spec)
    if isinstance(spec.eta, AdaptiveEta):
        return run_adaptive(spec)
    return run_multifidelity(spec)
