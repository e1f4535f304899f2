"""Benchmark tables and the studies replayed on them.

A benchmark table stores, for every prior draw, both fidelities' distances,
accept flags and costs, together with the continuation uniform drawn after
the low-fidelity simulation.  Any fixed ``(eta1, eta2)`` campaign can then
be replayed without re-simulating: a row is checked when ``u < eta`` and
is charged ``cost_lo + cost_hi`` in that case and ``cost_lo`` otherwise.

Studies built on replay:

* :func:`efficiency_study`: ESS per second across disjoint subsamples for a
  list of continuation probabilities, with a pairwise exceedance matrix.
* :func:`variance_study`: spread of ``mu_ABC(F)`` under a fixed simulation
  budget, against the F-specific objective ``phi(eta; F)``.
* :func:`burn_in_study`: probabilities tuned on short burn-in subsamples
  and the efficiency they deliver afterwards.

Plot-data writers at the bottom emit one CSV per figure; their column
meanings are listed in :data:`PLOT_COLUMNS`.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from .abc_core import EstimationError, ess, weight_plain
from .mf_tuning import (DEFAULT_FLOORS, ContinuationProbs, PerfEstimates, f_weighted_estimates,
                        midpoint_variants, optimal_eta, optimal_eta_constrained, perf_estimates,
                        phi)
from .problems import Problem
from .streams import BENCHMARK, IndexStreams

log = logging.getLogger(__name__)

VARIANCE_NAMESPACE = "variance-study"

# ---------------------------------------------------------------------------
# benchmark table


@dataclass
class BenchmarkTable:
    """Complete low/high-fidelity pairs, one row per prior draw.

    Attributes:
        theta: Parameters, shape ``(n, p)``.
        d_lo: Low-fidelity distances.
        d_hi: High-fidelity distances.
        cost_lo: Low-fidelity costs in seconds.
        cost_hi: Coupled high-fidelity costs in seconds.
        w_lo: Low-fidelity accept flags.
        w_hi: High-fidelity accept flags.
        u: Continuation uniforms drawn after the low-fidelity simulation.
        index: Row indices in the ``benchmark`` stream namespace.
        param_names: Parameter names.
    """

    theta: np.ndarray
    d_lo: np.ndarray
    d_hi: np.ndarray
    cost_lo: np.ndarray
    cost_hi: np.ndarray
    w_lo: np.ndarray
    w_hi: np.ndarray
    u: np.ndarray
    index: np.ndarray
    param_names: tuple = ()

    _COLUMNS = ("d_lo", "d_hi", "cost_lo", "cost_hi", "w_lo", "w_hi", "u")

    def __len__(self):
        return len(self.d_lo)

    def subset(self, rows) -> "BenchmarkTable":
        rows = np.asarray(rows)
        return BenchmarkTable(self.theta[rows], *(getattr(self, c)[rows] for c in self._COLUMNS),
                              self.index[rows], self.param_names)

    def column(self, name):
        """Parameter column by name."""
        return self.theta[:, list(self.param_names).index(name)]

    def f_values(self, F) -> np.ndarray:
        if callable(F):
            return np.array([float(F(t)) for t in self.theta])
        return np.asarray(F, dtype=float)

    def estimates(self) -> PerfEstimates:
        return perf_estimates(self.w_lo, self.w_hi, self.cost_lo, self.cost_hi)

    def reference_estimate(self, F) -> float:
        """High-fidelity rejection estimate of ``E[F]`` over all rows."""
        w = self.w_hi.astype(float)
        if w.sum() == 0:
            raise EstimationError("no high-fidelity accepts in the table")
        return float(np.dot(w, self.f_values(F)) / w.sum())

    def f_estimates(self, F, f_bar=None) -> PerfEstimates:
        f = self.f_values(F)
        if f_bar is None:
            f_bar = self.reference_estimate(f)
        return f_weighted_estimates(self.w_lo, self.w_hi, self.cost_lo, self.cost_hi, f, f_bar)

    def to_csv(self, path):
        names = self.param_names or tuple(f"theta{j}" for j in range(self.theta.shape[1]))
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", *names, *self._COLUMNS])
            for i in range(len(self)):
                writer.writerow([int(self.index[i]), *(repr(float(v)) for v in self.theta[i]),
                                 repr(float(self.d_lo[i])), repr(float(self.d_hi[i])),
                                 repr(float(self.cost_lo[i])), repr(float(self.cost_hi[i])),
                                 int(self.w_lo[i]), int(self.w_hi[i]), repr(float(self.u[i]))])

    @classmethod
    def from_csv(cls, path) -> "BenchmarkTable":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        p = header.index("d_lo") - 1
        data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), -1)
        return cls(data[:, 1:1 + p], data[:, p + 1], data[:, p + 2], data[:, p + 3],
                   data[:, p + 4], data[:, p + 5].astype(np.int64),
                   data[:, p + 6].astype(np.int64), data[:, p + 7],
                   data[:, 0].astype(np.int64), tuple(header[1:1 + p]))


_FAILURES = (ArithmeticError, RuntimeError, ValueError)


def _benchmark_rows(problem: Problem, seed, start, stop):
    streams = IndexStreams(seed, BENCHMARK)
    rows, bad = [], []
    for i in range(start, stop):
        rng = streams(i)
        try:
            theta = problem.prior.sample(rng).values
            low = problem.simulate_low(theta, rng)
            u = rng.random()
            high = problem.simulate_high(theta, low, rng)
        except _FAILURES as exc:
            log.warning("benchmark row %d failed: %s", i, exc)
            bad.append(i)
            continue
        rows.append((i, np.asarray(theta, dtype=float), low.distance, high.distance, low.cost,
                     high.cost, weight_plain(low.distance, problem.epsilon_lo),
                     weight_plain(high.distance, problem.epsilon), u))
    return rows, bad


def generate_benchmark(problem: Problem, n: int, seed: int = 0, workers: int = 1,
                       progress: Callable[[int], None] | None = None) -> BenchmarkTable:
    """Simulate ``n`` complete coupled pairs from the ``benchmark`` streams.

    Row ``i`` draws the parameter, runs the low-fidelity model, draws the
    continuation uniform and then always runs the coupled high-fidelity
    model, exactly the order a live campaign with the same seed follows.
    Failed rows are logged and left out.

    Args:
        problem: Inference problem.
        n: Number of rows to attempt.
        seed: Master seed.
        workers: Processes; the table does not depend on this.
        progress: Optional callback receiving the number of finished rows.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rows, bad = [], []
    if workers > 1:
        bounds = np.linspace(0, n, 4 * workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_benchmark_rows, problem, seed, int(a), int(b))
                       for a, b in zip(bounds[:-1], bounds[1:])]
            for fut in futures:
                r, b = fut.result()
                rows.extend(r)
                bad.extend(b)
                if progress:
                    progress(len(rows))
    else:
        step = max(1, n // 20)
        for a in range(0, n, step):
            r, b = _benchmark_rows(problem, seed, a, min(n, a + step))
            rows.extend(r)
            bad.extend(b)
            if progress:
                progress(len(rows))
    if bad:
        log.warning("%d benchmark rows failed and were excluded", len(bad))
    p = len(problem.param_names)
    col = lambda k, dt=float: np.array([r[k] for r in rows], dtype=dt)  # noqa: E731
    theta = np.array([r[1] for r in rows], dtype=float).reshape(len(rows), p)
    return BenchmarkTable(theta, col(2), col(3), col(4), col(5), col(6, np.int64),
                          col(7, np.int64), col(8), col(0, np.int64), tuple(problem.param_names))


# ---------------------------------------------------------------------------
# replay


def replay(table: BenchmarkTable, eta1: float, eta2: float, rows=None, u=None):
    """Weights and charged costs of a fixed-probability campaign on stored rows.

    Args:
        table: Benchmark table.
        eta1: Continuation probability after a low-fidelity accept.
        eta2: Continuation probability after a low-fidelity reject.
        rows: Row positions to replay (default: all, in order).
        u: Continuation uniforms to use instead of the stored ones.

    Returns:
        ``(w, cost, checked)`` arrays.
    """
    rows = np.arange(len(table)) if rows is None else np.asarray(rows)
    w_lo = table.w_lo[rows].astype(float)
    w_hi = table.w_hi[rows].astype(float)
    u = table.u[rows] if u is None else np.asarray(u, dtype=float)
    eta = np.where(w_lo > 0, eta1, eta2)
    checked = u < eta
    w = np.where(checked, w_lo + (w_hi - w_lo) / eta, w_lo)
    cost = table.cost_lo[rows] + np.where(checked, table.cost_hi[rows], 0.0)
    return w, cost, checked


def efficiency(w, cost) -> float:
    total = float(np.sum(cost))
    return ess(w) / total if total > 0 else float("nan")


# ---------------------------------------------------------------------------
# continuation-probability settings


def standard_settings(est: PerfEstimates, floors=DEFAULT_FLOORS) -> dict:
    """Named settings: rejection, early rejection, early decision, early accept/reject, midpoints."""
    best = optimal_eta(est, floors)
    out = {"early accept/reject": best,
           "early decision": optimal_eta_constrained(est, "early_decision", floors),
           "early rejection": optimal_eta_constrained(est, "early_rejection", floors),
           "rejection": ContinuationProbs(1.0, 1.0, "fixed")}
    out.update(midpoint_variants(best))
    return out


# ---------------------------------------------------------------------------
# efficiency study


def exceedance(a, b, paired=False) -> float:
    """Probability that a realisation from ``a`` beats one from ``b``; ties count one half.

    With ``paired=False`` every pair ``(a_i, b_j)`` with ``i != j`` is
    compared, so realisations built from the same subsample are never
    compared and a setting against itself gives one half in expectation.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if paired:
        return float(np.mean((a > b) + 0.5 * (a == b)))
    gt = (a[:, None] > b[None, :]).astype(float) + 0.5 * (a[:, None] == b[None, :])
    if len(a) == len(b) and len(a) > 1:
        np.fill_diagonal(gt, 0.0)
        return float(gt.sum() / (len(a) * (len(a) - 1)))
    return float(gt.mean())


@dataclass
class EfficiencyStudy:
    """Efficiencies per setting across subsamples.

    Attributes:
        labels: Setting names.
        etas: ``(eta1, eta2)`` per setting.
        efficiencies: Array ``(settings, repeats)`` of ESS per second.
        exceedance: Matrix whose ``[a, b]`` entry is the probability that
            setting ``a`` beats setting ``b``.
        phi: Objective value per setting from the full-table estimates.
    """

    labels: list
    etas: np.ndarray
    efficiencies: np.ndarray
    exceedance: np.ndarray
    phi: np.ndarray

    def median(self, label):
        return float(np.median(self.efficiencies[self.labels.index(label)]))

    def p_exceeds(self, row, col):
        return float(self.exceedance[self.labels.index(row), self.labels.index(col)])

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["setting", "eta1", "eta2", "phi", "repeat", "efficiency"])
            for s, label in enumerate(self.labels):
                for r, e in enumerate(self.efficiencies[s]):
                    writer.writerow([label, repr(float(self.etas[s, 0])),
                                     repr(float(self.etas[s, 1])), repr(float(self.phi[s])), r,
                                     repr(float(e))])

    def exceedance_to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row_exceeds_column", *self.labels])
            for s, label in enumerate(self.labels):
                writer.writerow([label, *(repr(float(v)) for v in self.exceedance[s])])


def efficiency_study(table: BenchmarkTable, settings: dict | None = None, subsample: int = 200,
                     repeats: int = 50, seed: int | None = None,
                     floors=DEFAULT_FLOORS) -> EfficiencyStudy:
    """Replay each setting on disjoint subsamples and compare efficiencies.

    Args:
        table: Benchmark table.
        settings: Mapping from label to :class:`ContinuationProbs`; default
            :func:`standard_settings` from the full-table estimates.
        subsample: Rows per subsample.
        repeats: Number of subsamples.
        seed: If given, rows are shuffled with this seed before
            partitioning; otherwise consecutive blocks are used.
        floors: Lower bounds for the default settings.
    """
    if repeats * subsample > len(table):
        raise ValueError("repeats * subsample exceeds the number of rows")
    est = table.estimates()
    settings = settings if settings is not None else standard_settings(est, floors)
    order = np.arange(len(table))
    if seed is not None:
        order = np.random.default_rng(seed).permutation(len(table))
    blocks = order[:repeats * subsample].reshape(repeats, subsample)
    labels = list(settings)
    etas = np.array([[settings[k].eta1, settings[k].eta2] for k in labels], dtype=float)
    eff = np.empty((len(labels), repeats))
    for s, (e1, e2) in enumerate(etas):
        for r in range(repeats):
            w, cost, _ = replay(table, e1, e2, rows=blocks[r])
            eff[s, r] = efficiency(w, cost)
    exc = np.array([[exceedance(eff[a], eff[b]) for b in range(len(labels))]
                    for a in range(len(labels))])
    phis = np.array([phi(e1, e2, est) for e1, e2 in etas])
    return EfficiencyStudy(labels, etas, eff, exc, phis)


# ---------------------------------------------------------------------------
# variance study


def repressilator_functions() -> dict:
    """Test functions of the Hill coefficient ``n`` used in the variance study.

    ``F2`` is the indicator of ``1.2 < n < 2.4``; ``F2_narrow`` is the
    indicator of ``1.2 < n < 1.4``, which carries almost no posterior mass.
    """
    return {"F1": lambda th: float(1.9 < th[0] < 2.1),
            "F2": lambda th: float(1.2 < th[0] < 2.4),
            "F2_narrow": lambda th: float(1.2 < th[0] < 1.4),
            "F3": lambda th: float(th[0])}


@dataclass
class VarianceStudy:
    """Variance of ``mu_ABC(F)`` under a budget, per function and setting.

    Attributes:
        rows: One dict per (function, setting) with keys ``F``, ``setting``,
            ``eta1``, ``eta2``, ``phi``, ``variance``, ``reduction`` (relative
            to rejection), ``mean``, ``mean_records`` and ``failed`` (repeats
            whose weights summed to zero).
        budget: Simulation budget per repeat in seconds.
        repeats: Number of repeats.
    """

    rows: list
    budget: float
    repeats: int

    def get(self, F, setting) -> dict:
        for r in self.rows:
            if r["F"] == F and r["setting"] == setting:
                return r
        raise KeyError((F, setting))

    def spearman(self, F=None) -> float:
        """Rank correlation of ``phi`` and the observed variance (pooled when ``F`` is None)."""
        rows = [r for r in self.rows if F is None or r["F"] == F]
        x = [r["phi"] for r in rows]
        y = [r["variance"] for r in rows]
        if np.ptp(y) == 0 or np.ptp(x) == 0:
            return float("nan")
        return float(stats.spearmanr(x, y).statistic)

    def to_csv(self, path):
        keys = ["F", "setting", "eta1", "eta2", "phi", "variance", "reduction", "mean",
                "mean_records", "failed"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            for r in self.rows:
                writer.writerow({k: r[k] for k in keys})


def f_settings(table: BenchmarkTable, F, floors=DEFAULT_FLOORS) -> dict:
    """Rejection plus early rejection, early decision and early accept/reject tuned for ``F``."""
    est = table.f_estimates(F)
    return {"rejection": ContinuationProbs(1.0, 1.0, "fixed"),
            "early rejection": optimal_eta_constrained(est, "early_rejection", floors),
            "early decision": optimal_eta_constrained(est, "early_decision", floors),
            "early accept/reject": optimal_eta(est, floors)}


def _budget_prefix(cost, budget):
    """Number of records run before the budget stop rule fires (inclusive)."""
    csum = np.cumsum(cost)
    k = int(np.searchsorted(csum, budget, side="left"))
    return min(k + 1, len(cost)), bool(csum[-1] >= budget)


def variance_study(table: BenchmarkTable, functions: dict | None = None,
                   budget: float | None = None, repeats: int = 500, seed: int = 0,
                   floors=DEFAULT_FLOORS, include_ess_optimal: bool = True) -> VarianceStudy:
    """Spread of budget-limited estimates for each function and setting.

    Each repeat resamples rows with replacement and draws fresh
    continuation uniforms; all settings in that repeat consume the same
    sequence, each until its own charged cost reaches ``budget``.

    Args:
        table: Benchmark table.
        functions: Mapping name to ``F(theta)``; default
            :func:`repressilator_functions`.
        budget: Seconds per repeat; default is the cost of 2000 fully
            checked rows on average.
        repeats: Number of repeats.
        seed: Seed of the ``variance-study`` stream namespace.
        floors: Lower bounds on the probabilities.
        include_ess_optimal: Also evaluate the probabilities that maximise
            the ESS-based efficiency.
    """
    functions = functions if functions is not None else repressilator_functions()
    if budget is None:
        budget = 2000.0 * float(np.mean(table.cost_lo + table.cost_hi))
    if budget <= float(np.max(table.cost_lo + table.cost_hi)):
        raise ValueError("budget must exceed the largest single-row cost")
    ess_opt = optimal_eta(table.estimates(), floors) if include_ess_optimal else None
    f_vals = {name: table.f_values(F) for name, F in functions.items()}
    plan = []
    for name, F in functions.items():
        sets = f_settings(table, f_vals[name], floors)
        if ess_opt is not None:
            sets["ESS-optimal"] = ess_opt
        est_f = table.f_estimates(f_vals[name])
        for label, cp in sets.items():
            plan.append((name, label, cp.eta1, cp.eta2, phi(cp.eta1, cp.eta2, est_f)))
    streams = IndexStreams(seed, VARIANCE_NAMESPACE)
    mean_cost_lo = max(float(np.mean(table.cost_lo)), 1e-300)
    chunk = int(min(max(2.0 * budget / mean_cost_lo, 100), 5e6))
    results = {(p[0], p[1]): [] for p in plan}
    counts = {(p[0], p[1]): [] for p in plan}
    n = len(table)
    for r in range(repeats):
        rng = streams(r)
        rows = rng.integers(0, n, size=chunk)
        u = rng.random(chunk)
        for name, label, e1, e2, _ in plan:
            while True:
                w, cost, _ = replay(table, e1, e2, rows=rows, u=u)
                k, done = _budget_prefix(cost, budget)
                if done:
                    break
                rows = np.concatenate([rows, rng.integers(0, n, size=chunk)])
                u = np.concatenate([u, rng.random(chunk)])
            idx = rows[:k]
            total = w[:k].sum()
            counts[(name, label)].append(k)
            if total == 0:
                results[(name, label)].append(math.nan)
            else:
                f = f_vals[name][idx]
                # centring makes a constant F come out exact
                results[(name, label)].append(float(f[0] + np.dot(w[:k], f - f[0]) / total))
    out = []
    base = {}
    for name, label, e1, e2, ph in plan:
        vals = np.array(results[(name, label)])
        ok = vals[np.isfinite(vals)]
        var = float(np.var(ok, ddof=1)) if len(ok) > 1 else math.nan
        if label == "rejection":
            base[name] = var
        out.append({"F": name, "setting": label, "eta1": e1, "eta2": e2, "phi": ph,
                    "variance": var, "mean": float(np.mean(ok)) if len(ok) else math.nan,
                    "mean_records": float(np.mean(counts[(name, label)])),
                    "failed": int(len(vals) - len(ok))})
    for row in out:
        b = base.get(row["F"], math.nan)
        row["reduction"] = 1.0 - row["variance"] / b if b and b > 0 else math.nan
    return VarianceStudy(out, float(budget), repeats)


# ---------------------------------------------------------------------------
# burn-in study


@dataclass
class BurnInStudy:
    """Probabilities tuned on burn-in subsamples and the efficiency they deliver.

    Attributes:
        burn_in: Rows per burn-in subsample.
        phase: Rows per post-burn-in subsample.
        etas: Tuned ``(eta1, eta2)`` per repeat, shape ``(repeats, 2)``.
        flags: Diagnostic flags per repeat (floor-sitting etc.).
        burn_efficiency: Efficiency of each burn-in subsample at ``(1, 1)``.
        phase_efficiency: Efficiency of each post-burn-in subsample at the
            probabilities tuned on its burn-in subsample.
        full_eta: Probabilities tuned on the whole table.
        full_efficiency: Efficiency of each post-burn-in subsample at
            ``full_eta``.
    """

    burn_in: int
    phase: int
    etas: np.ndarray
    flags: list
    burn_efficiency: np.ndarray
    phase_efficiency: np.ndarray
    full_eta: ContinuationProbs
    full_efficiency: np.ndarray

    def floor_sitting(self, floors=DEFAULT_FLOORS) -> np.ndarray:
        """Boolean ``(repeats, 2)`` array marking probabilities at their floors."""
        return np.isclose(self.etas, np.asarray(floors, dtype=float)[None, :])

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["repeat", "eta1", "eta2", "flags", "burn_efficiency",
                             "phase_efficiency", "full_eta_efficiency"])
            for r in range(len(self.etas)):
                writer.writerow([r, repr(float(self.etas[r, 0])), repr(float(self.etas[r, 1])),
                                 ";".join(self.flags[r]), repr(float(self.burn_efficiency[r])),
                                 repr(float(self.phase_efficiency[r])),
                                 repr(float(self.full_efficiency[r]))])


def burn_in_study(table: BenchmarkTable, burn_in: int, phase: int, repeats: int,
                  floors=DEFAULT_FLOORS, seed: int | None = None) -> BurnInStudy:
    """Tune on ``repeats`` disjoint burn-in subsamples and replay the tuned probabilities.

    Burn-in subsample ``r`` (all rows checked) yields ``eta_r``; the next
    ``phase`` rows of the same partition are replayed at ``eta_r`` and at the
    full-table optimum for comparison.
    """
    need = repeats * (burn_in + phase)
    if need > len(table):
        raise ValueError(f"burn-in study needs {need} rows, table has {len(table)}")
    order = np.arange(len(table))
    if seed is not None:
        order = np.random.default_rng(seed).permutation(len(table))
    blocks = order[:need].reshape(repeats, burn_in + phase)
    full = optimal_eta(table.estimates(), floors)
    etas = np.empty((repeats, 2))
    flags, burn_eff, phase_eff, full_eff = [], np.empty(repeats), np.empty(repeats), \
        np.empty(repeats)
    for r in range(repeats):
        burn_rows, phase_rows = blocks[r, :burn_in], blocks[r, burn_in:]
        sub = table.subset(burn_rows)
        try:
            cp = optimal_eta(sub.estimates(), floors, "adapted")
        except ValueError:
            cp = ContinuationProbs(1.0, 1.0, "fixed", flags=("invalid-estimates",))
        etas[r] = cp.pair
        flags.append(tuple(cp.flags))
        burn_eff[r] = efficiency(table.w_hi[burn_rows],
                                 table.cost_lo[burn_rows] + table.cost_hi[burn_rows])
        w, cost, _ = replay(table, cp.eta1, cp.eta2, rows=phase_rows)
        phase_eff[r] = efficiency(w, cost)
        w, cost, _ = replay(table, full.eta1, full.eta2, rows=phase_rows)
        full_eff[r] = efficiency(w, cost)
    return BurnInStudy(burn_in, phase, etas, flags, burn_eff, phase_eff, full, full_eff)


# ---------------------------------------------------------------------------
# plot data

PLOT_COLUMNS = {
    "fig1_distances.csv": "d_lo, d_hi: low/high-fidelity distances per benchmark row; "
                          "w_lo, w_hi: accept flags; class: TP/FP/FN/TN",
    "fig2_efficiency.csv": "setting, eta1, eta2, phi, repeat, efficiency (ESS per second)",
    "fig4_variance.csv": "F, setting, eta1, eta2, phi, variance, reduction, mean, "
                         "mean_records, failed",
    "fig5_burn_in.csv": "repeat, eta1, eta2, flags, burn_efficiency, phase_efficiency, "
                        "full_eta_efficiency",
    "fig6_eta_cloud.csv": "repeat, eta1, eta2, at_floor1, at_floor2, flags",
    "phi_surface.csv": "eta1, eta2, phi on a regular grid from the full-table estimates",
}


def write_distance_plot(table: BenchmarkTable, path):
    cls = np.where(table.w_lo > 0, np.where(table.w_hi > 0, "TP", "FP"),
                   np.where(table.w_hi > 0, "FN", "TN"))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d_lo", "d_hi", "w_lo", "w_hi", "class"])
        for i in range(len(table)):
            writer.writerow([repr(float(table.d_lo[i])), repr(float(table.d_hi[i])),
                             int(table.w_lo[i]), int(table.w_hi[i]), cls[i]])


def write_phi_surface(est: PerfEstimates, path, points: int = 50):
    grid = np.linspace(1.0 / points, 1.0, points)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eta1", "eta2", "phi"])
        for e1 in grid:
            for e2 in grid:
                writer.writerow([repr(float(e1)), repr(float(e2)), repr(phi(e1, e2, est))])


def write_eta_cloud(study: BurnInStudy, path, floors=DEFAULT_FLOORS):
    at = study.floor_sitting(floors)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["repeat", "eta1", "eta2", "at_floor1", "at_floor2", "flags"])
        for r in range(len(study.etas)):
            writer.writerow([r, repr(float(study.etas[r, 0])), repr(float(study.etas[r, 1])),
                             int(at[r, 0]), int(at[r, 1]), ";".join(study.flags[r])])


@dataclass
class StudyOutputs:
    """Paths written by :func:`write_plot_data`."""

    files: dict = field(default_factory=dict)


def write_plot_data(out_dir, table: BenchmarkTable | None = None,
                    eff: EfficiencyStudy | None = None, var: VarianceStudy | None = None,
                    burn: BurnInStudy | None = None) -> StudyOutputs:
    """Write whichever per-figure CSV files the given results support."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    if table is not None:
        files["fig1_distances.csv"] = out / "fig1_distances.csv"
        write_distance_plot(table, files["fig1_distances.csv"])
        files["phi_surface.csv"] = out / "phi_surface.csv"
        write_phi_surface(table.estimates(), files["phi_surface.csv"])
    if eff is not None:
        files["fig2_efficiency.csv"] = out / "fig2_efficiency.csv"
        eff.to_csv(files["fig2_efficiency.csv"])
        files["exceedance.csv"] = out / "exceedance.csv"
        eff.exceedance_to_csv(files["exceedance.csv"])
    if var is not None:
        files["fig4_variance.csv"] = out / "fig4_variance.csv"
        var.to_csv(files["fig4_variance.csv"])
    if burn is not None:
        files["fig5_burn_in.csv"] = out / "fig5_burn_in.csv"
        burn.to_csv(files["fig5_burn_in.csv"])
        files["fig6_eta_cloud.csv"] = out / "fig6_eta_cloud.csv"
        write_eta_cloud(burn, files["fig6_eta_cloud.csv"])
    return StudyOutputs(files)
