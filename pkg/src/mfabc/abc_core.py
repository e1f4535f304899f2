"""Summary statistics, distances, ABC weights and weighted-sample estimates.

The multifidelity weight combines a cheap low-fidelity accept/reject
decision ``w_tilde`` with an occasional high-fidelity check.  The check is
run with probability ``eta1`` after a low-fidelity accept and ``eta2``
after a low-fidelity reject, and the weight is corrected so that its
expectation equals the high-fidelity acceptance probability:

==============  =====  ======  ==============
case            w~     check   weight
==============  =====  ======  ==============
early-accept    1      no      1
early-reject    0      no      0
checked-TP      1      w = 1   1
checked-FP      1      w = 0   1 - 1/eta1
checked-TN      0      w = 0   0
checked-FN      0      w = 1   1/eta2
==============  =====  ======  ==============
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class EstimationError(ValueError):
    """The weights sum to zero, so the self-normalised estimate is undefined."""


# ---------------------------------------------------------------------------
# summaries and distances


def repressilator_summary(trajectory) -> np.ndarray:
    """All species counts at the save times, flattened time-major.

    With states sampled at ``t = 0, 1, ..., 10`` this gives 66 values.
    """
    return np.asarray(trajectory.states, dtype=float).ravel()


def viral_summary(final_virus, first_detection, t_final, threshold=3.0) -> np.ndarray:
    """Population summary of per-cell viral outputs.

    A cell counts as infected when its final virus count exceeds
    ``threshold``.  The summary is the infected fraction, ``log2`` of the
    mean final virus count of infected cells, and their mean first
    detection time as a fraction of ``t_final``.  Fractions are used rather
    than percentages.  With no infected cell the zero vector is returned.

    Args:
        final_virus: Final virus count per cell.
        first_detection: Time each cell's virus count first exceeded the
            threshold (``nan`` if never).
        t_final: Time horizon.
        threshold: Detection threshold on the virus count.
    """
    final_virus = np.asarray(final_virus, dtype=float)
    first_detection = np.asarray(first_detection, dtype=float)
    infected = final_virus > threshold
    if not infected.any():
        return np.zeros(3)
    return np.array([infected.mean(),
                     math.log2(final_virus[infected].mean()),
                     first_detection[infected].mean() / t_final])


@dataclass(frozen=True)
class DistanceSpec:
    """Scaled Euclidean distance and acceptance threshold.

    Attributes:
        epsilon: Acceptance threshold; a simulation is accepted when its
            distance is strictly below it.
        scale: The Euclidean norm is divided by this constant (the time
            horizon for the repressilator, 1 for the viral model).
    """

    epsilon: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


def distance(sim, obs, spec: DistanceSpec) -> float:
    """``||sim - obs||_2 / spec.scale``."""
    sim = np.asarray(sim, dtype=float)
    obs = np.asarray(obs, dtype=float)
    if sim.shape != obs.shape:
        raise ValueError(f"summary shapes differ: {sim.shape} vs {obs.shape}")
    return float(np.linalg.norm(sim - obs)) / spec.scale


# ---------------------------------------------------------------------------
# weights


class Case(str, enum.Enum):
    """How a record's weight was decided."""

    EARLY_ACCEPT = "early-accept"
    EARLY_REJECT = "early-reject"
    TRUE_POSITIVE = "checked-TP"
    TRUE_NEGATIVE = "checked-TN"
    FALSE_POSITIVE = "checked-FP"
    FALSE_NEGATIVE = "checked-FN"
    PLAIN = "plain"


CASES = tuple(Case)
_CASE_CODE = {c: i for i, c in enumerate(CASES)}


def case_of(w_tilde: int, checked: bool, w_high: int | None) -> Case:
    if not checked:
        return Case.EARLY_ACCEPT if w_tilde else Case.EARLY_REJECT
    if w_tilde:
        return Case.TRUE_POSITIVE if w_high else Case.FALSE_POSITIVE
    return Case.FALSE_NEGATIVE if w_high else Case.TRUE_NEGATIVE


def weight_plain(dist: float, epsilon: float) -> int:
    """Indicator of ``dist < epsilon`` (ties are rejected)."""
    return int(dist < epsilon)


def _check_eta(eta):
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"continuation probability must lie in (0, 1], got {eta}")


def weight_early_rejection(w_tilde: int, u: float, eta: float,
                           high_fi: Callable[[], int]) -> tuple[float, bool]:
    """Early-rejection weight.

    The high-fidelity simulation runs only when ``u < eta``, in which case
    its acceptance indicator is reweighted by ``1/eta``.  ``w_tilde`` does
    not enter the weight; it is accepted so that all weight functions share
    one signature.

    Returns:
        ``(weight, high_fi_used)``.
    """
    _check_eta(eta)
    if u >= eta:
        return 0.0, False
    return high_fi() / eta, True


def weight_early_decision(w_tilde: int, u: float, eta: float,
                          high_fi: Callable[[], int]) -> tuple[float, bool]:
    """``w_tilde + I(u < eta) (w - w_tilde) / eta``; may be negative."""
    _check_eta(eta)
    if u >= eta:
        return float(w_tilde), False
    return w_tilde + (high_fi() - w_tilde) / eta, True


@dataclass(frozen=True)
class WeightRecord:
    """Outcome of one Monte Carlo index.

    Attributes:
        w: Weight of the parameter.
        w_tilde: Low-fidelity acceptance (-1 when no low-fidelity model ran).
        w_high: High-fidelity acceptance (-1 when it was not simulated).
        case: Which branch of the case table produced ``w``.
        eta: Continuation probability that applied to this record.
        u: Uniform draw used for the continuation test.
        index: Monte Carlo index.
        theta: Parameter values.
        cost_lo: Low-fidelity simulation cost in seconds.
        cost_hi: High-fidelity simulation cost in seconds (0 if not run).
    """

    w: float
    w_tilde: int
    w_high: int
    case: Case
    eta: float = 1.0
    u: float = float("nan")
    index: int = -1
    theta: np.ndarray = field(default_factory=lambda: np.empty(0))
    cost_lo: float = 0.0
    cost_hi: float = 0.0

    @property
    def cost(self):
        return self.cost_lo + self.cost_hi

    @property
    def checked(self):
        return self.w_high >= 0


def weight_multifidelity(w_tilde: int, u: float, eta1: float, eta2: float,
                         high_fi: Callable[[], int]) -> WeightRecord:
    """Early accept/reject weight with ``eta = eta1 * w_tilde + eta2 * (1 - w_tilde)``."""
    _check_eta(eta1)
    _check_eta(eta2)
    eta = eta1 if w_tilde else eta2
    if u >= eta:
        return WeightRecord(float(w_tilde), int(w_tilde), -1, case_of(w_tilde, False, None),
                            eta, u)
    w_high = int(high_fi())
    w = w_tilde + (w_high - w_tilde) / eta
    return WeightRecord(w, int(w_tilde), w_high, case_of(w_tilde, True, w_high), eta, u)


# ---------------------------------------------------------------------------
# weighted samples


def ess(weights) -> float:
    """Effective sample size ``(sum w)^2 / sum w^2``; 0 when all weights vanish."""
    if isinstance(weights, WeightedSample):
        weights = weights.w
    w = np.asarray(weights, dtype=float)
    s2 = float(np.dot(w, w))
    if s2 == 0.0:
        return 0.0
    return float(w.sum()) ** 2 / s2


def _f_values(F, thetas):
    if callable(F):
        return np.array([float(F(t)) for t in thetas])
    return np.asarray(F, dtype=float)


def estimate_from(weights, values) -> float:
    """Self-normalised estimate ``sum w F / sum w``."""
    w = np.asarray(weights, dtype=float)
    f = np.asarray(values, dtype=float)
    total = w.sum()
    if total == 0.0:
        raise EstimationError("total weight is zero; the ABC estimate is undefined")
    return float(np.dot(w, f) / total)


@dataclass
class WeightedSample:
    """Column-oriented collection of weight records.

    Attributes:
        theta: Parameter matrix of shape ``(n, p)``.
        w: Weights.
        w_tilde: Low-fidelity acceptances (-1 if not simulated).
        w_high: High-fidelity acceptances (-1 if not simulated).
        case: Integer case codes indexing :data:`CASES`.
        cost_lo: Low-fidelity costs.
        cost_hi: High-fidelity costs.
        eta: Continuation probability applied to each record.
        u: Continuation uniforms.
        index: Monte Carlo indices.
        param_names: Names of the parameter columns.
    """

    theta: np.ndarray
    w: np.ndarray
    w_tilde: np.ndarray
    w_high: np.ndarray
    case: np.ndarray
    cost_lo: np.ndarray
    cost_hi: np.ndarray
    eta: np.ndarray
    u: np.ndarray
    index: np.ndarray
    param_names: tuple = ()

    def __len__(self):
        return len(self.w)

    @classmethod
    def from_records(cls, records: Sequence[WeightRecord], param_names=()):
        n = len(records)
        p = len(param_names) if param_names else (len(records[0].theta) if n else 0)
        theta = np.empty((n, p))
        for i, r in enumerate(records):
            theta[i] = r.theta
        col = lambda f, dt=float: np.array([f(r) for r in records], dtype=dt)  # noqa: E731
        return cls(theta, col(lambda r: r.w), col(lambda r: r.w_tilde, np.int64),
                   col(lambda r: r.w_high, np.int64),
                   col(lambda r: _CASE_CODE[Case(r.case)], np.int64),
                   col(lambda r: r.cost_lo), col(lambda r: r.cost_hi), col(lambda r: r.eta),
                   col(lambda r: r.u), col(lambda r: r.index, np.int64), tuple(param_names))

    def record(self, i) -> WeightRecord:
        return WeightRecord(float(self.w[i]), int(self.w_tilde[i]), int(self.w_high[i]),
                            CASES[self.case[i]], float(self.eta[i]), float(self.u[i]),
                            int(self.index[i]), self.theta[i].copy(),
                            float(self.cost_lo[i]), float(self.cost_hi[i]))

    @property
    def records(self):
        return [self.record(i) for i in range(len(self))]

    @property
    def costs(self):
        return self.cost_lo + self.cost_hi

    @property
    def ess(self):
        return ess(self.w)

    @property
    def total_cost(self):
        return float(self.costs.sum())

    @property
    def z_hat(self):
        return float(self.w.sum() / len(self)) if len(self) else float("nan")

    @property
    def efficiency(self):
        return self.ess / self.total_cost

    def case_counts(self) -> dict:
        counts = np.bincount(self.case, minlength=len(CASES))
        return {c.value: int(k) for c, k in zip(CASES, counts)}

    def estimate(self, F) -> float:
        """``sum w F(theta) / sum w``; ``F`` is a callable or a vector of values."""
        return estimate_from(self.w, _f_values(F, self.theta))

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            names = self.param_names or tuple(f"theta{j}" for j in range(self.theta.shape[1]))
            writer.writerow(["index", *names, "w", "w_tilde", "case", "cost_lo", "cost_hi"])
            for i in range(len(self)):
                writer.writerow([int(self.index[i]), *(repr(float(v)) for v in self.theta[i]),
                                 repr(float(self.w[i])), int(self.w_tilde[i]),
                                 CASES[self.case[i]].value, repr(float(self.cost_lo[i])),
                                 repr(float(self.cost_hi[i]))])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        names = tuple(header[1:header.index("w")])
        p = len(names)
        n = len(body)
        theta = np.array([[float(v) for v in r[1:1 + p]] for r in body]).reshape(n, p)
        w = np.array([float(r[1 + p]) for r in body])
        w_tilde = np.array([int(r[2 + p]) for r in body], dtype=np.int64)
        case = np.array([_CASE_CODE[Case(r[3 + p])] for r in body], dtype=np.int64)
        cost_lo = np.array([float(r[4 + p]) for r in body])
        cost_hi = np.array([float(r[5 + p]) for r in body])
        # the checked outcome is recoverable from the case label
        w_high = np.full(n, -1, dtype=np.int64)
        for code, value in ((Case.TRUE_POSITIVE, 1), (Case.FALSE_NEGATIVE, 1),
                            (Case.FALSE_POSITIVE, 0), (Case.TRUE_NEGATIVE, 0), (Case.PLAIN, None)):
            mask = case == _CASE_CODE[code]
            w_high[mask] = value if value is not None else w[mask].astype(np.int64)
        index = np.array([int(r[0]) for r in body], dtype=np.int64)
        return cls(theta, w, w_tilde, w_high, case, cost_lo, cost_hi, np.full(n, np.nan),
                   np.full(n, np.nan), index, names)

    def summary(self, functions: dict | None = None) -> dict:
        out = {"n": len(self), "ess": self.ess, "T_tot": self.total_cost, "Z_hat": self.z_hat,
               "case_counts": self.case_counts(), "mu_abc": {}}
        for name, F in (functions or {}).items():
            try:
                out["mu_abc"][name] = self.estimate(F)
            except EstimationError:
                out["mu_abc"][name] = None
        return out

    def write_summary(self, path, functions: dict | None = None):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(functions), fh, indent=2)


def estimate(sample: WeightedSample, F) -> float:
    """Self-normalised ABC estimate of ``E[F(theta) | data]``."""
    return sample.estimate(F)
