"""Exact, tau-leap and hybrid simulation, coupled through shared Poisson noise.

Every reaction channel is driven by its own unit-rate Poisson process run on
the channel's integrated propensity.  The tau-leap simulator records how
many points of each process fell into each leap, as (length, count)
pieces.  :func:`complete_poisson` fills in the point positions and
:func:`map_to_exact` turns the completed processes into an exact
trajectory.  Averaged over the low-fidelity run, the coupled exact
trajectory has the same law as an independent Gillespie run.

Example:
    >>> import numpy as np
    >>> from mfabc.reaction_network import repressilator_model
    >>> net = repressilator_model()
    >>> rng = np.random.default_rng(1)
    >>> low, skeleton = tau_leap_simulate(net, None, 0.01, rng, save_times=np.arange(11.0))
    >>> high = coupled_high_fi(CoupledPair(low, skeleton), net, None, rng,
    ...                        save_times=np.arange(11.0))
    >>> high.states.shape
    (11, 6)
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels as K
from ._random import seed_state
from .reaction_network import OverflowGuardError, ReactionNetwork


class SimulationError(RuntimeError):
    """A simulator stopped without reaching the time horizon."""


_STATUS_MESSAGES = {
    K.NEGATIVE: "an exact step produced a negative species count",
    K.TOO_MANY_HALVINGS: "tau-leap step halved too often to keep counts non-negative",
    K.QUEUE_FULL: "tau-leap lookahead queue overflowed",
}


def _raise_for(status):
    if status == K.OK:
        return
    if status == K.OVERFLOW:
        raise OverflowGuardError("species count exceeded 2**31 - 1")
    raise SimulationError(_STATUS_MESSAGES.get(status, f"kernel status {status}"))


def _as_rng(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass
class Trajectory:
    """Piecewise-constant state path or states sampled at fixed times.

    Attributes:
        times: Increasing time points, starting at 0.
        states: Integer array of shape ``(len(times), N)``; row ``i`` holds
            the state from ``times[i]`` until the next time point.
        cost: Wall-clock seconds spent producing the trajectory.
        species: Species names.
        crossing: First time the watched species exceeded its threshold,
            or ``nan`` if it never did (or nothing was watched).
        sampled: True when ``states`` are samples at given save times
            rather than the full jump path.
        n_events: Number of reaction firings or leaps simulated.
    """

    times: np.ndarray
    states: np.ndarray
    cost: float
    species: tuple = ()
    crossing: float = float("nan")
    sampled: bool = False
    n_events: int = 0

    @property
    def final_state(self):
        return self.states[-1]

    def at(self, t):
        """State (or states, for an array ``t``) in force at time ``t``."""
        idx = np.searchsorted(self.times, t, side="right") - 1
        return self.states[np.clip(idx, 0, len(self.times) - 1)]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", *self.species])
            for t, row in zip(self.times, self.states):
                writer.writerow([repr(float(t)), *map(int, row)])


@dataclass
class PoissonSkeleton:
    """Coarse record of each reaction's unit-rate Poisson process.

    For reaction ``j`` the process is described by consecutive intervals of
    internal time with lengths ``lengths[j]`` holding ``counts[j]`` points.
    ``leaps[j]`` gives the tau-leap index each interval belongs to, or -1
    for intervals revealed beyond the last leap.
    """

    lengths: list
    counts: list
    leaps: list
    leap_taus: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def reaction_count(self):
        return len(self.lengths)

    def horizon(self):
        """Internal time covered by the record, per reaction."""
        return np.array([float(np.sum(d)) for d in self.lengths])

    def leap_lengths(self, j):
        """Total internal length consumed by reaction ``j`` in each leap."""
        keep = self.leaps[j] >= 0
        return np.bincount(self.leaps[j][keep], weights=self.lengths[j][keep],
                           minlength=len(self.leap_taus))

    def leap_counts(self, j):
        keep = self.leaps[j] >= 0
        return np.bincount(self.leaps[j][keep], weights=self.counts[j][keep],
                           minlength=len(self.leap_taus)).astype(np.int64)

    def to_dict(self):
        return {"D": [d.tolist() for d in self.lengths],
                "P": [p.tolist() for p in self.counts],
                "leap": [l.tolist() for l in self.leaps],
                "tau": self.leap_taus.tolist()}

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_arrays(cls, lengths, counts, leaps=None):
        lengths = [np.asarray(d, dtype=float) for d in lengths]
        counts = [np.asarray(p, dtype=np.int64) for p in counts]
        if leaps is None:
            leaps = [np.arange(len(d), dtype=np.int64) for d in lengths]
        leaps = [np.asarray(l, dtype=np.int64) for l in leaps]
        for d, p in zip(lengths, counts):
            if d.shape != p.shape or np.any(d < 0) or np.any(p < 0):
                raise ValueError("pieces need matching non-negative lengths and counts")
        return cls(lengths, counts, leaps)


@dataclass
class UnitPoissonProcess:
    """Known points of each reaction's unit-rate Poisson process.

    ``times[j]`` lists the points of reaction ``j`` in increasing order and
    ``horizon[j]`` is the internal time up to which the list is complete.
    Points beyond the horizon are generated on demand with Exp(1) spacings.
    """

    times: list
    horizon: np.ndarray

    @property
    def reaction_count(self):
        return len(self.times)

    def flat(self):
        offsets = np.zeros(len(self.times) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(t) for t in self.times])
        points = np.concatenate(self.times) if self.times else np.empty(0)
        return points.astype(float), offsets, np.asarray(self.horizon, dtype=float)

    @classmethod
    def empty(cls, reaction_count):
        return cls([np.empty(0) for _ in range(reaction_count)], np.zeros(reaction_count))

    @classmethod
    def from_lists(cls, times, horizon=None):
        times = [np.asarray(t, dtype=float) for t in times]
        if horizon is None:
            horizon = [t[-1] if len(t) else 0.0 for t in times]
        return cls(times, np.asarray(horizon, dtype=float))


@dataclass
class CoupledPair:
    """Low-fidelity output plus the noise record needed to couple to it.

    Attributes:
        low_fi: Low-fidelity trajectory.
        skeleton: Recorded noise: a :class:`PoissonSkeleton` from tau-leaping
            or a :class:`UnitPoissonProcess` from the hybrid simulator.
        high_fi: Coupled high-fidelity trajectory once generated.
        stream_id: Label of the random stream that produced the pair.
        coupled: True once ``high_fi`` was generated from ``skeleton``.
    """

    low_fi: Trajectory
    skeleton: object
    high_fi: Trajectory | None = None
    stream_id: str = ""
    coupled: bool = False


def _law(net: ReactionNetwork, params):
    return net.rate_law(params).as_tuple()


def _save_args(net, save_times):
    if save_times is None:
        return np.empty(0), True
    st = np.asarray(save_times, dtype=float)
    if np.any(np.diff(st) < 0):
        raise ValueError("save_times must be non-decreasing")
    return st, False


def _watch_args(net, watch):
    if watch is None:
        return -1, 0.0
    species, threshold = watch
    return net.species.index(species), float(threshold)


def _trajectory(net, status, saved, pt, px, crossing, n_events, save_times, full, cost):
    _raise_for(status)
    crossing = float(crossing) if crossing >= 0 else float("nan")
    if full:
        times, states = pt, px
        if times[-1] < net.t_final:
            times = np.append(times, net.t_final)
            states = np.vstack([states, states[-1:]])
        return Trajectory(times, states, max(cost, 1e-9), net.species, crossing, False,
                          int(n_events))
    return Trajectory(save_times, saved, max(cost, 1e-9), net.species, crossing, True,
                      int(n_events))


def ssa_simulate(net: ReactionNetwork, params: Mapping | None, rng, *, save_times=None,
                 watch=None) -> Trajectory:
    """Gillespie direct-method simulation on ``[0, net.t_final]``.

    Args:
        net: Reaction network.
        params: Parameter values overriding the network defaults; a
            :class:`~mfabc.reaction_network.ParamVector` or a mapping.
        rng: numpy Generator or seed.
        save_times: If given, return only the states at these times.
        watch: Optional ``(species, threshold)``; the first time the species
            count exceeds the threshold is stored in ``Trajectory.crossing``.
    """
    start = time.perf_counter()
    st, full = _save_args(net, save_times)
    w, th = _watch_args(net, watch)
    state = seed_state(_as_rng(rng))
    out = K.ssa_kernel(net.x0, net.stoich, *_law(net, _params(params)), float(net.t_final), st,
                       full, w, th, state)
    cost = time.perf_counter() - start
    return _trajectory(net, *out, st, full, cost)


def tau_leap_simulate(net: ReactionNetwork, params, tau: float, rng, *, save_times=None,
                      watch=None, adapt: float = 0.0):
    """Tau-leaping that records its Poisson noise.

    With ``adapt == 0`` every leap has length ``tau``.  With ``adapt > 0`` the
    leap is the smaller of ``tau`` and the step for which the expected change
    of each species, and its standard deviation, stay below ``adapt`` times its
    count (floored at one molecule).

    A leap of length ``tau`` consumes internal time ``tau * v_j(x)`` of
    reaction ``j``'s unit-rate process.  If a leap would make a count
    negative, the step is halved and retried; the retry reuses the counts
    already drawn by splitting them binomially, so the recorded pieces remain
    an exact description of the underlying processes.

    Returns:
        ``(trajectory, skeleton)``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if adapt < 0:
        raise ValueError("adapt must be non-negative")
    start = time.perf_counter()
    st, full = _save_args(net, save_times)
    w, th = _watch_args(net, watch)
    state = seed_state(_as_rng(rng))
    (status, saved, pt, px, crossing, br, bd, bp, bl, taus) = K.tau_leap_kernel(
        net.x0, net.stoich, *_law(net, _params(params)), float(net.t_final), float(tau), st,
        full, w, th, state, float(adapt))
    _raise_for(status)
    skeleton = _skeleton_from_buffers(net.reaction_count, br, bd, bp, bl, taus)
    cost = time.perf_counter() - start
    traj = _trajectory(net, status, saved, pt, px, crossing, len(taus), st, full, cost)
    return traj, skeleton


def _skeleton_from_buffers(M, br, bd, bp, bl, taus):
    order = np.argsort(br, kind="stable")
    br, bd, bp, bl = br[order], bd[order], bp[order], bl[order]
    cuts = np.searchsorted(br, np.arange(M + 1))
    return PoissonSkeleton([bd[cuts[j]:cuts[j + 1]] for j in range(M)],
                           [bp[cuts[j]:cuts[j + 1]] for j in range(M)],
                           [bl[cuts[j]:cuts[j + 1]] for j in range(M)],
                           np.asarray(taus))


def complete_poisson(skeleton: PoissonSkeleton, rng) -> UnitPoissonProcess:
    """Fill in point positions: uniform within each piece, pieces laid end to end."""
    if isinstance(skeleton, UnitPoissonProcess):
        return skeleton
    state = seed_state(_as_rng(rng))
    times = [K.complete_kernel(np.asarray(d, float), np.asarray(p, np.int64), state)
             for d, p in zip(skeleton.lengths, skeleton.counts)]
    return UnitPoissonProcess(times, skeleton.horizon())


def map_to_exact(process: UnitPoissonProcess, net: ReactionNetwork, params, rng=None, *,
                 save_times=None, watch=None) -> Trajectory:
    """Exact trajectory by running each process on its integrated propensity.

    ``rng`` supplies the Exp(1) spacings used once a process runs past its
    known horizon; it may be omitted when the process is long enough.
    """
    if process.reaction_count != net.reaction_count:
        raise ValueError("process and network have different reaction counts")
    start = time.perf_counter()
    st, full = _save_args(net, save_times)
    w, th = _watch_args(net, watch)
    state = seed_state(_as_rng(rng))
    points, offsets, horizon = process.flat()
    out = K.map_kernel(points, offsets, horizon, net.x0, net.stoich, *_law(net, _params(params)),
                       float(net.t_final), st, full, w, th, state)
    cost = time.perf_counter() - start
    return _trajectory(net, *out, st, full, cost)


def coupled_high_fi(pair: CoupledPair, net: ReactionNetwork, params, rng, *, save_times=None,
                    watch=None) -> Trajectory:
    """High-fidelity trajectory driven by the low-fidelity run's noise.

    The returned cost covers completing the recorded noise and the exact
    simulation; the low-fidelity cost is not included.
    """
    if pair.skeleton is None:
        raise ValueError("pair has no recorded noise")
    rng = _as_rng(rng)
    start = time.perf_counter()
    process = complete_poisson(pair.skeleton, rng)
    traj = map_to_exact(process, net, params, rng, save_times=save_times, watch=watch)
    traj.cost = max(time.perf_counter() - start, 1e-9)
    pair.high_fi = traj
    pair.coupled = True
    return traj


def hybrid_wait_time(k_prod, k_decay, source, fast):
    """Deterministic wait before the fast species steps toward ``k_prod*source/k_decay``.

    Returns ``inf`` when the fast species is within one molecule of that mean.
    """
    return float(K.hybrid_wait(float(k_prod), float(k_decay), int(source), int(fast))[0])


def hybrid_simulate(net: ReactionNetwork, params, rng, *, source="template", fast="struct",
                    production_rate="k3", decay_rate="k5", save_times=None, watch=None):
    """Hybrid simulation with one fast production/decay pair treated deterministically.

    Reactions flagged fast are replaced by unit steps of the ``fast``
    species toward its quasi-steady mean ``k_prod * source / k_decay``.
    All other reactions are simulated exactly against their own unit-rate
    Poisson processes, which are returned for coupling.

    Returns:
        ``(trajectory, process)`` where ``process`` holds the consumed points
        of every slow reaction (fast reactions get empty processes).
    """
    start = time.perf_counter()
    values = net.resolve(_params(params))
    st, full = _save_args(net, save_times)
    w, th = _watch_args(net, watch)
    state = seed_state(_as_rng(rng))
    slow = ~net.fast_mask
    out = K.hybrid_kernel(net.x0, net.stoich, *_law(net, values), slow,
                          net.species.index(source), net.species.index(fast),
                          float(values[production_rate]), float(values[decay_rate]),
                          float(net.t_final), st, full, w, th, state)
    status, saved, pt, px, crossing, rec_r, rec_v, target, n_events = out
    _raise_for(status)
    M = net.reaction_count
    times, horizon = [], np.zeros(M)
    for j in range(M):
        if slow[j]:
            times.append(np.append(rec_v[rec_r == j], target[j]))
            horizon[j] = target[j]
        else:
            times.append(np.empty(0))
    process = UnitPoissonProcess(times, horizon)
    cost = time.perf_counter() - start
    traj = _trajectory(net, status, saved, pt, px, crossing, n_events, st, full, cost)
    return traj, process


def hybrid_viral_simulate(net: ReactionNetwork, params, rng, *, save_times=None, watch=None):
    """:func:`hybrid_simulate` with the viral model's fast pair (k3, k5) on struct."""
    return hybrid_simulate(net, params, rng, save_times=save_times, watch=watch)


def _params(params):
    if params is None:
        return None
    if hasattr(params, "as_dict"):
        return params.as_dict()
    return dict(params)
