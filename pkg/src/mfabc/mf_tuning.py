"""Choosing continuation probabilities that maximise ESS per unit cost.

For continuation probabilities ``(eta1, eta2)`` the product of the limiting
second moment of the multifidelity weight and the expected cost per sample
is

    phi(eta1, eta2) = [(p_tp - p_fp) + p_fp/eta1 + p_fn/eta2]
                      * [E c~ + eta1 c_p + eta2 c_n],

and the asymptotic efficiency ESS/T_tot is proportional to ``1/phi``.  The
rates are the joint probabilities of the low/high-fidelity outcomes
(true positive, false positive, false negative) and ``c_p``, ``c_n`` are
the expected high-fidelity costs after a low-fidelity accept or reject,
each multiplied by the probability of that outcome.

Replacing the rates with ``(F - F_bar)**2``-weighted versions gives the
objective for the variance of a particular estimate ``mu_ABC(F)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

DEFAULT_FLOORS = (0.01, 0.01)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PerfEstimates:
    """Classification rates and costs entering the objective.

    Attributes:
        p_tp: P(low accept and high accept), or its F-weighted version.
        p_fp: P(low accept and high reject), or its F-weighted version.
        p_fn: P(low reject and high accept), or its F-weighted version.
        c_p: E[c | low accept] * P(low accept).
        c_n: E[c | low reject] * P(low reject).
        c_lo: E[c~], the mean low-fidelity cost.
        weighted: True for F-weighted rates.
        f_bar: Reference value used for the F-weighting.
    """

    p_tp: float
    p_fp: float
    p_fn: float
    c_p: float
    c_n: float
    c_lo: float
    weighted: bool = False
    f_bar: float | None = None

    def __post_init__(self):
        rates = (self.p_tp, self.p_fp, self.p_fn)
        if any(not math.isfinite(v) or v < 0 for v in rates):
            raise ValueError("rates must be finite and non-negative")
        if any(not math.isfinite(v) or v < 0 for v in (self.c_p, self.c_n, self.c_lo)):
            raise ValueError("costs must be finite and non-negative")
        if not self.weighted:
            tol = 1e-12
            if self.p_tp + self.p_fn > 1 + tol or self.p_tp + self.p_fp > 1 + tol:
                raise ValueError("rates are not a valid joint distribution")

    @property
    def r0(self):
        return self.p_tp - self.p_fp

    @property
    def r_p(self):
        return _ratio(self.p_fp * self.c_lo, self.c_p)

    @property
    def r_n(self):
        return _ratio(self.p_fn * self.c_lo, self.c_n)

    @property
    def degenerate(self):
        return self.p_fp == 0.0 and self.p_fn == 0.0

    def to_dict(self):
        return asdict(self)


def _ratio(num, den):
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


@dataclass(frozen=True)
class ContinuationProbs:
    """Continuation probabilities with their provenance.

    Attributes:
        eta1: Probability of checking a low-fidelity accept.
        eta2: Probability of checking a low-fidelity reject.
        provenance: ``"fixed"``, ``"optimized"`` or ``"adapted"``.
        floors: Lower bounds applied to ``(eta1, eta2)``.
        flags: Diagnostic labels, e.g. ``"no-false-positive"``.
        mode: Which optimisation produced the values.
    """

    eta1: float
    eta2: float
    provenance: str = "fixed"
    floors: tuple = (0.0, 0.0)
    flags: tuple = ()
    mode: str = "early_accept_reject"

    def __post_init__(self):
        for eta, floor in zip((self.eta1, self.eta2), self.floors):
            if not 0.0 < eta <= 1.0:
                raise ValueError(f"continuation probability {eta} outside (0, 1]")
            if eta < floor - 1e-15:
                raise ValueError("continuation probability below its floor")

    @property
    def pair(self):
        return (self.eta1, self.eta2)

    @property
    def provisional(self):
        return bool(self.flags)


# ---------------------------------------------------------------------------
# objective


def _split_terms(eta1, eta2, est):
    a = 0.0 if est.p_fp == 0.0 else est.p_fp / eta1
    b = 0.0 if est.p_fn == 0.0 else est.p_fn / eta2
    return est.r0 + a + b, est.c_lo + eta1 * est.c_p + eta2 * est.c_n


def second_moment(eta1, eta2, est: PerfEstimates) -> float:
    """Limiting ``E[w_mf^2]`` (or its F-weighted analogue)."""
    return _split_terms(eta1, eta2, est)[0]


def expected_cost(eta1, eta2, est: PerfEstimates) -> float:
    """Expected simulation cost of one Monte Carlo index."""
    return _split_terms(eta1, eta2, est)[1]


def phi(eta1, eta2, est: PerfEstimates) -> float:
    """Second moment times expected cost; smaller is better."""
    if not (eta1 > 0 and eta2 > 0):
        raise ValueError("continuation probabilities must be positive")
    m2, cost = _split_terms(eta1, eta2, est)
    return m2 * cost


def phi_grid(eta1, eta2, est: PerfEstimates) -> np.ndarray:
    """Vectorised :func:`phi` over broadcastable arrays."""
    e1 = np.asarray(eta1, dtype=float)
    e2 = np.asarray(eta2, dtype=float)
    a = est.p_fp / e1 if est.p_fp else 0.0
    b = est.p_fn / e2 if est.p_fn else 0.0
    return (est.r0 + a + b) * (est.c_lo + e1 * est.c_p + e2 * est.c_n)


def golden_section(f, lo, hi, tol=1e-6):
    """Minimiser of a unimodal function on ``[lo, hi]``."""
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    # the ends of the interval are candidates too when f is monotone
    return min((lo, x, hi), key=f)


# ---------------------------------------------------------------------------
# optimal continuation probabilities


def _boundary_etas(est: PerfEstimates):
    """Minimisers of ``phi(., 1)`` and ``phi(1, .)`` over ``(0, 1]``."""
    X, Y = est.r0, est.c_lo
    a, b, c, d = est.p_fp, est.p_fn, est.c_p, est.c_n
    if X + b <= 0.0:
        eta1_bar = 1.0
    else:
        eta1_bar = min(1.0, math.sqrt(_ratio(a * (Y + d), c * (X + b))))
    if X + a <= 0.0:
        eta2_bar = 1.0
    else:
        eta2_bar = min(1.0, math.sqrt(_ratio(b * (Y + c), d * (X + a))))
    return eta1_bar, eta2_bar


def _finish(eta1, eta2, est, floors, provenance, mode, extra_flags=()):
    flags = list(extra_flags)
    if est.p_fp == 0.0 and mode != "early_rejection":
        flags.append("no-false-positive")
    if est.p_fn == 0.0:
        flags.append("no-false-negative")
    eta1 = min(1.0, max(eta1, floors[0]))
    eta2 = min(1.0, max(eta2, floors[1]))
    if mode == "early_decision":
        eta1 = eta2 = min(1.0, max(eta1, floors[0], floors[1]))
    return ContinuationProbs(eta1, eta2, provenance, tuple(floors), tuple(flags), mode)


def optimal_eta(est: PerfEstimates, floors=DEFAULT_FLOORS,
                provenance="optimized") -> ContinuationProbs:
    """Minimiser of :func:`phi` over ``(0, 1]**2``, raised to ``floors``.

    When ``R0 = p_tp - p_fp > 0`` and both ``R_p = p_fp E c~ / c_p`` and
    ``R_n = p_fn E c~ / c_n`` are at most ``R0`` the minimiser is interior,
    ``(sqrt(R_p/R0), sqrt(R_n/R0))``.  Otherwise it lies on an edge
    ``eta1 = 1`` or ``eta2 = 1`` and the better edge minimiser is returned.
    A zero false-positive (false-negative) rate drives the corresponding
    probability to its floor and the result is flagged.
    """
    if est.degenerate:
        return ContinuationProbs(floors[0], floors[1], provenance, tuple(floors),
                                 ("degenerate",), "early_accept_reject")
    X, Rp, Rn = est.r0, est.r_p, est.r_n
    if X > 0.0 and max(Rp, Rn) <= X:
        eta1, eta2 = math.sqrt(Rp / X), math.sqrt(Rn / X)
        return _finish(eta1, eta2, est, floors, provenance, "early_accept_reject")
    eta1_bar, eta2_bar = _boundary_etas(est)
    lo1, lo2 = max(eta1_bar, floors[0], 1e-300), max(eta2_bar, floors[1], 1e-300)
    if phi(1.0, lo2, est) <= phi(lo1, 1.0, est):
        return _finish(1.0, eta2_bar, est, floors, provenance, "early_accept_reject")
    return _finish(eta1_bar, 1.0, est, floors, provenance, "early_accept_reject")


def optimal_eta_constrained(est: PerfEstimates, mode: str, floors=DEFAULT_FLOORS,
                            provenance="optimized") -> ContinuationProbs:
    """Optimum along a constrained family.

    Args:
        est: Rates and costs.
        mode: ``"early_rejection"`` fixes ``eta1 = 1`` and optimises
            ``eta2``; ``"early_decision"`` optimises a common
            ``eta1 = eta2``.
        floors: Lower bounds.
        provenance: Provenance tag of the result.
    """
    X, Y = est.r0, est.c_lo
    if mode == "early_rejection":
        _, eta2 = _boundary_etas(est)
        return _finish(1.0, eta2, est, floors, provenance, mode)
    if mode == "early_decision":
        a_b = est.p_fp + est.p_fn
        c_d = est.c_p + est.c_n
        if a_b == 0.0:
            return ContinuationProbs(max(floors), max(floors), provenance, tuple(floors),
                                     ("degenerate",), mode)
        if X <= 0.0:
            eta = 1.0
        else:
            eta = min(1.0, math.sqrt(_ratio(a_b * Y, c_d * X)))
        return _finish(eta, eta, est, floors, provenance, mode)
    raise ValueError(f"unknown mode {mode!r}")


def midpoint_variants(eta: ContinuationProbs) -> dict:
    """Points midway between ``eta`` and each corner of the unit square."""
    out = {}
    for s1, c1 in (("-", 0.0), ("+", 1.0)):
        for s2, c2 in (("-", 0.0), ("+", 1.0)):
            out[f"{s1}/{s2}"] = ContinuationProbs(0.5 * (eta.eta1 + c1), 0.5 * (eta.eta2 + c2),
                                                    "fixed")
    return out


# ---------------------------------------------------------------------------
# estimates from complete pairs


def perf_estimates(w_tilde, w_high, cost_lo, cost_hi) -> PerfEstimates:
    """Rates and costs from pairs where both fidelities were simulated."""
    wt = np.asarray(w_tilde, dtype=bool)
    wh = np.asarray(w_high, dtype=bool)
    cost_hi = np.asarray(cost_hi, dtype=float)
    n = len(wt)
    if n == 0:
        raise ValueError("no records")
    return PerfEstimates(p_tp=float(np.sum(wt & wh)) / n, p_fp=float(np.sum(wt & ~wh)) / n,
                         p_fn=float(np.sum(~wt & wh)) / n,
                         c_p=float(np.sum(cost_hi * wt)) / n, c_n=float(np.sum(cost_hi * ~wt)) / n,
                         c_lo=float(np.mean(cost_lo)))


def f_weighted_estimates(w_tilde, w_high, cost_lo, cost_hi, f_values, f_bar) -> PerfEstimates:
    """Rates weighted by ``(F - f_bar)**2``; costs as in :func:`perf_estimates`."""
    plain = perf_estimates(w_tilde, w_high, cost_lo, cost_hi)
    wt = np.asarray(w_tilde, dtype=bool)
    wh = np.asarray(w_high, dtype=bool)
    sq = (np.asarray(f_values, dtype=float) - f_bar) ** 2
    n = len(wt)
    return PerfEstimates(p_tp=float(np.sum(sq * (wt & wh))) / n,
                         p_fp=float(np.sum(sq * (wt & ~wh))) / n,
                         p_fn=float(np.sum(sq * (~wt & wh))) / n,
                         c_p=plain.c_p, c_n=plain.c_n, c_lo=plain.c_lo, weighted=True,
                         f_bar=float(f_bar))


# ---------------------------------------------------------------------------
# running estimates during a campaign


class NotReady(RuntimeError):
    """Corrected estimates need both low-fidelity outcomes among checked records."""


@dataclass
class BurnInTally:
    """Running sums behind the corrected burn-in estimates.

    ``m`` counts all records and ``k`` the checked ones (both fidelities
    simulated).  Because checks happen with different probabilities after a
    low-fidelity accept and reject, quantities on the accept side are
    rescaled by ``rho_m / rho_k`` and those on the reject side by
    ``(1 - rho_m) / (1 - rho_k)``, where ``rho`` is the fraction of
    low-fidelity accepts among all (``m``) or checked (``k``) records.

    For F-specific objectives the tally also keeps ``sum F^0, F^1, F^2`` per
    checked class, so ``sum (F - mu)^2`` can be evaluated for the current
    estimate ``mu`` without revisiting records.
    """

    m: int = 0
    m_pos: int = 0
    k: int = 0
    k_pos: int = 0
    n_tp: int = 0
    n_fp: int = 0
    n_fn: int = 0
    cost_lo_sum: float = 0.0
    cost_hi_pos: float = 0.0
    cost_hi_neg: float = 0.0
    w_sum: float = 0.0
    wf_sum: float = 0.0
    f_sums: dict = field(default_factory=lambda: {c: [0.0, 0.0, 0.0] for c in ("tp", "fp", "fn")})

    def update(self, w_tilde, w_high, cost_lo, cost_hi, w=None, f=None):
        """Add one record; ``w_high < 0`` marks an unchecked record."""
        self.m += 1
        self.cost_lo_sum += cost_lo
        if w_tilde:
            self.m_pos += 1
        if w is not None:
            self.w_sum += w
            if f is not None:
                self.wf_sum += w * f
        if w_high < 0:
            return self
        self.k += 1
        if w_tilde:
            self.k_pos += 1
            self.cost_hi_pos += cost_hi
            cls = "tp" if w_high else "fp"
        else:
            self.cost_hi_neg += cost_hi
            cls = "fn" if w_high else None
        if cls == "tp":
            self.n_tp += 1
        elif cls == "fp":
            self.n_fp += 1
        elif cls == "fn":
            self.n_fn += 1
        if cls is not None and f is not None:
            s = self.f_sums[cls]
            s[0] += 1.0
            s[1] += f
            s[2] += f * f
        return self

    @property
    def rho_m(self):
        return self.m_pos / self.m if self.m else float("nan")

    @property
    def rho_k(self):
        return self.k_pos / self.k if self.k else float("nan")

    @property
    def ready(self):
        return self.k > 0 and 0 < self.k_pos < self.k

    @property
    def mu_bar(self):
        return self.wf_sum / self.w_sum if self.w_sum != 0 else float("nan")

    def factors(self):
        if not self.ready:
            raise NotReady("need both low-fidelity accepts and rejects among checked records")
        pos = self.rho_m / self.rho_k
        neg = (1.0 - self.rho_m) / (1.0 - self.rho_k)
        return pos, neg

    def estimates(self, weighted=False, mu=None) -> PerfEstimates:
        """Corrected estimates; F-weighted around ``mu`` (default: running estimate)."""
        pos, neg = self.factors()
        k = self.k
        c_lo = self.cost_lo_sum / self.m
        c_p = pos * self.cost_hi_pos / k
        c_n = neg * self.cost_hi_neg / k
        if not weighted:
            return PerfEstimates(pos * self.n_tp / k, pos * self.n_fp / k, neg * self.n_fn / k,
                                 c_p, c_n, c_lo)
        mu = self.mu_bar if mu is None else mu
        if not math.isfinite(mu):
            raise NotReady("running estimate of F is undefined")

        def sq(cls):
            s0, s1, s2 = self.f_sums[cls]
            return max(0.0, s2 - 2.0 * mu * s1 + mu * mu * s0)

        return PerfEstimates(pos * sq("tp") / k, pos * sq("fp") / k, neg * sq("fn") / k,
                             c_p, c_n, c_lo, weighted=True, f_bar=mu)


def burn_in_update(tally: BurnInTally, record, F=None) -> BurnInTally:
    """Add a :class:`~mfabc.abc_core.WeightRecord` to ``tally``."""
    f = None
    if F is not None:
        f = float(F(record.theta)) if callable(F) else float(F)
    return tally.update(record.w_tilde, record.w_high, record.cost_lo, record.cost_hi,
                        w=record.w, f=f)


def variance_proxy(weights, f_values) -> float:
    """Plug-in estimate of ``Var(mu_ABC(F))``.

    ``sum w^2 (F - F_bar)^2 / (sum w)^2`` with ``F_bar`` the weighted
    estimate; for unit weights this is the sample variance of ``F`` divided
    by ``N``.
    """
    w = np.asarray(weights, dtype=float)
    f = np.asarray(f_values, dtype=float)
    total = w.sum()
    if total == 0.0:
        from .abc_core import EstimationError
        raise EstimationError("total weight is zero")
    f_bar = np.dot(w, f) / total
    return float(np.sum(w * w * (f - f_bar) ** 2) / total**2)


def tuning_report(est: PerfEstimates, eta: ContinuationProbs, **extra) -> dict:
    report = {"estimates": est.to_dict(), "R_p": est.r_p, "R_n": est.r_n, "R_0": est.r0,
              "eta1": eta.eta1, "eta2": eta.eta2, "mode": eta.mode, "provenance": eta.provenance,
              "floors": list(eta.floors), "flags": list(eta.flags),
              "phi": phi(eta.eta1, eta.eta2, est)}
    report.update(extra)
    return report


def write_tuning_report(path, report: dict):
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(clean(report), fh, indent=2)


def read_tuning_report(path) -> ContinuationProbs:
    with open(path, encoding="utf-8") as fh:
        rep = json.load(fh)
    return ContinuationProbs(float(rep["eta1"]), float(rep["eta2"]), "optimized",
                             tuple(rep.get("floors", (0.0, 0.0))), tuple(rep.get("flags", ())),
                             rep.get("mode", "early_accept_reject"))
