"""numba kernels behind :mod:`mfabc.stochastic_sim`.

Every kernel takes the rate law as six arrays (see
:class:`mfabc.reaction_network.RateLaw`), a 256-bit generator state from
:mod:`mfabc._random`, and a vector of save times at which the state is
sampled.  With ``full=True`` the complete jump path is also returned.

Status codes returned by the kernels:

0. finished normally
1. a species count exceeded the overflow guard
2. an exact step produced a negative count (inconsistent network)
3. the tau-leap step was halved too many times
4. the tau-leap lookahead queue overflowed
"""

import math

import numba as nb
import numpy as np

from ._random import binomial, exponential, poisson, uniform

OK, OVERFLOW, NEGATIVE, TOO_MANY_HALVINGS, QUEUE_FULL = 0, 1, 2, 3, 4
COUNT_LIMIT = 2**31 - 1
QUEUE_CAPACITY = 64
QUEUE_LIMIT = 1 << 16
MAX_HALVINGS = 30
_SAVE_EPS = 1e-9


@nb.njit(cache=True)
def propensities(x, reac, rate, basal, hsp, hK, hn, out):
    M = rate.shape[0]
    for j in range(M):
        a = rate[j]
        s0 = reac[j, 0]
        s1 = reac[j, 1]
        if s0 >= 0:
            if s1 == s0:
                a *= x[s0] * (x[s0] - 1) * 0.5
            else:
                a *= x[s0]
                if s1 >= 0:
                    a *= x[s1]
        h = hsp[j]
        if h >= 0 and a > 0.0:
            a /= 1.0 + (x[h] / hK[j]) ** hn[j]
        out[j] = basal[j] + a


@nb.njit(cache=True)
def _apply(x, stoich, j, times):
    """x += times * stoich[:, j]; returns a status code."""
    status = OK
    for i in range(x.shape[0]):
        x[i] += times * stoich[i, j]
        if x[i] < 0:
            status = NEGATIVE
        elif x[i] > COUNT_LIMIT:
            if status == OK:
                status = OVERFLOW
    return status


@nb.njit(cache=True)
def _grow_path(pt, px, n):
    if n < pt.shape[0]:
        return pt, px
    cap = 2 * pt.shape[0]
    nt = np.empty(cap)
    nx = np.empty((cap, px.shape[1]), dtype=np.int64)
    nt[:n] = pt[:n]
    nx[:n] = px[:n]
    return nt, nx


@nb.njit(cache=True)
def _fill_saved(saved, save_times, si, x, t_next):
    """Store ``x`` for every pending save time strictly before ``t_next``."""
    while si < save_times.shape[0] and save_times[si] < t_next:
        for i in range(x.shape[0]):
            saved[si, i] = x[i]
        si += 1
    return si


@nb.njit(cache=True)
def _check_cross(x, watch, thresh, t, crossing):
    if crossing < 0.0 and watch >= 0 and x[watch] > thresh:
        return t
    return crossing


@nb.njit(cache=True)
def ssa_kernel(x0, stoich, reac, rate, basal, hsp, hK, hn, T, save_times, full, watch, thresh, s):
    N = x0.shape[0]
    M = rate.shape[0]
    x = x0.copy()
    a = np.empty(M)
    saved = np.empty((save_times.shape[0], N), dtype=np.int64)
    si = 0
    cap = 1024 if full else 1
    pt = np.empty(cap)
    px = np.empty((cap, N), dtype=np.int64)
    n = 0
    if full:
        pt[0] = 0.0
        px[0] = x
        n = 1
    crossing = _check_cross(x, watch, thresh, 0.0, -1.0)
    t = 0.0
    n_events = 0
    status = OK
    while True:
        propensities(x, reac, rate, basal, hsp, hK, hn, a)
        a0 = 0.0
        for j in range(M):
            a0 += a[j]
        if a0 <= 0.0:
            break
        t_new = t + exponential(s) / a0
        if t_new > T:
            break
        r = uniform(s) * a0
        J = -1
        acc = 0.0
        for j in range(M):
            if a[j] > 0.0:
                acc += a[j]
                J = j
                if r < acc:
                    break
        si = _fill_saved(saved, save_times, si, x, t_new)
        status = _apply(x, stoich, J, 1)
        t = t_new
        n_events += 1
        if status != OK:
            break
        crossing = _check_cross(x, watch, thresh, t, crossing)
        if full:
            pt, px = _grow_path(pt, px, n)
            pt[n] = t
            px[n] = x
            n += 1
    _fill_saved(saved, save_times, si, x, np.inf)
    return status, saved, pt[:n], px[:n], crossing, n_events


# ---------------------------------------------------------------------------
# tau-leap with exact recording of the unit-rate Poisson processes


@nb.njit(cache=True)
def _reveal(j, L, qlen, qcnt, qn, s):
    """Make the known pieces of reaction ``j`` cover exactly internal length ``L``.

    Pieces are consecutive (length, count) intervals of the unit-rate
    process starting at the current internal time.  A piece straddling
    ``L`` is split with a binomial draw, and an unknown stretch beyond the
    known pieces gets a fresh Poisson count.  Returns the number of pieces
    that now cover ``[0, L]`` and their total count, or ``-1`` pieces when
    the queue is full.
    """
    cum = 0.0
    cnt = 0
    k = 0
    tol = 1e-13 * L
    while k < qn[j]:
        if L - cum <= tol:
            return k, cnt
        ell = qlen[j, k]
        if cum + ell <= L + tol:
            cum += ell
            cnt += qcnt[j, k]
            k += 1
            continue
        if qn[j] >= qlen.shape[1]:
            return -1, 0
        ell1 = L - cum
        c = qcnt[j, k]
        c1 = binomial(s, c, ell1 / ell)
        for m in range(qn[j], k + 1, -1):
            qlen[j, m] = qlen[j, m - 1]
            qcnt[j, m] = qcnt[j, m - 1]
        qlen[j, k] = ell1
        qcnt[j, k] = c1
        qlen[j, k + 1] = ell - ell1
        qcnt[j, k + 1] = c - c1
        qn[j] += 1
        return k + 1, cnt + c1
    rem = L - cum
    if rem > tol:
        if qn[j] >= qlen.shape[1]:
            return -1, 0
        c = poisson(s, rem)
        qlen[j, k] = rem
        qcnt[j, k] = c
        qn[j] += 1
        return k + 1, cnt + c
    return k, cnt


@nb.njit(cache=True)
def _grow_queue(qlen, qcnt, qn):
    M, width = qlen.shape
    nl = np.empty((M, 2 * width))
    nc = np.empty((M, 2 * width), dtype=np.int64)
    for j in range(M):
        for m in range(qn[j]):
            nl[j, m] = qlen[j, m]
            nc[j, m] = qcnt[j, m]
    return nl, nc


@nb.njit(cache=True)
def _grow_pieces(buf_r, buf_d, buf_p, buf_l, n, need):
    cap = max(2 * buf_r.shape[0], need)
    nr = np.empty(cap, dtype=np.int64)
    nd = np.empty(cap)
    npp = np.empty(cap, dtype=np.int64)
    nl = np.empty(cap, dtype=np.int64)
    nr[:n] = buf_r[:n]
    nd[:n] = buf_d[:n]
    npp[:n] = buf_p[:n]
    nl[:n] = buf_l[:n]
    return nr, nd, npp, nl


@nb.njit(cache=True)
def _species_order(N, reac):
    """Highest order of any reaction consuming each species (at least 1)."""
    g = np.ones(N)
    for j in range(reac.shape[0]):
        order = (reac[j, 0] >= 0) + (reac[j, 1] >= 0)
        for r in range(2):
            i = reac[j, r]
            if i >= 0 and order > g[i]:
                g[i] = order
    return g


@nb.njit(cache=True)
def cao_step(x, stoich, a, g, eps):
    """Largest leap keeping the expected relative change of every species below ``eps``.

    Uses the mean and variance of the state change over the leap, with the
    bound on each species' change floored at one molecule.
    """
    N, M = stoich.shape
    best = np.inf
    for i in range(N):
        mu = 0.0
        var = 0.0
        for j in range(M):
            v = stoich[i, j]
            if v != 0:
                mu += v * a[j]
                var += v * v * a[j]
        bound = max(eps * x[i] / g[i], 1.0)
        if mu != 0.0:
            best = min(best, bound / abs(mu))
        if var > 0.0:
            best = min(best, bound * bound / var)
    return best


@nb.njit(cache=True)
def tau_leap_kernel(x0, stoich, reac, rate, basal, hsp, hK, hn, T, tau, save_times, full,
                    watch, thresh, s, cao_eps=0.0):
    N = x0.shape[0]
    M = rate.shape[0]
    g = _species_order(N, reac)
    x = x0.copy()
    xn = np.empty(N, dtype=np.int64)
    a = np.empty(M)
    counts = np.empty(M, dtype=np.int64)
    npieces = np.empty(M, dtype=np.int64)
    qlen = np.empty((M, QUEUE_CAPACITY))
    qcnt = np.empty((M, QUEUE_CAPACITY), dtype=np.int64)
    qn = np.zeros(M, dtype=np.int64)
    saved = np.empty((save_times.shape[0], N), dtype=np.int64)
    si = 0
    cap = 1024 if full else 1
    pt = np.empty(cap)
    px = np.empty((cap, N), dtype=np.int64)
    n = 0
    if full:
        pt[0] = 0.0
        px[0] = x
        n = 1
    nb_cap = M * (int(T / tau) + 2) + 64
    buf_r = np.empty(nb_cap, dtype=np.int64)
    buf_d = np.empty(nb_cap)
    buf_p = np.empty(nb_cap, dtype=np.int64)
    buf_l = np.empty(nb_cap, dtype=np.int64)
    npc = 0
    leap_taus = np.empty(64)
    crossing = _check_cross(x, watch, thresh, 0.0, -1.0)
    t = 0.0
    leap = 0
    status = OK
    t_eps = 1e-12 * max(1.0, T)
    while T - t > t_eps:
        propensities(x, reac, rate, basal, hsp, hK, hn, a)
        step = min(tau, T - t)
        if cao_eps > 0.0:
            step = min(step, cao_step(x, stoich, a, g, cao_eps))
        halvings = 0
        while True:
            for j in range(M):
                k, c = _reveal(j, step * a[j], qlen, qcnt, qn, s)
                while k < 0:
                    width = qlen.shape[1]
                    if width >= QUEUE_LIMIT:
                        break
                    qlen, qcnt = _grow_queue(qlen, qcnt, qn)
                    k, c = _reveal(j, step * a[j], qlen, qcnt, qn, s)
                if k < 0:
                    status = QUEUE_FULL
                    break
                npieces[j] = k
                counts[j] = c
            if status != OK:
                break
            negative = False
            for i in range(N):
                xn[i] = x[i]
            for j in range(M):
                if counts[j] > 0:
                    for i in range(N):
                        xn[i] += counts[j] * stoich[i, j]
            for i in range(N):
                if xn[i] < 0:
                    negative = True
            if not negative:
                break
            halvings += 1
            if halvings > MAX_HALVINGS:
                status = TOO_MANY_HALVINGS
                break
            step *= 0.5
        if status != OK:
            break
        # commit the leap
        need = npc + M
        for j in range(M):
            need += npieces[j]
        if need > buf_r.shape[0]:
            buf_r, buf_d, buf_p, buf_l = _grow_pieces(buf_r, buf_d, buf_p, buf_l, npc, need)
        for j in range(M):
            k = npieces[j]
            if k == 0:
                buf_r[npc] = j
                buf_d[npc] = 0.0
                buf_p[npc] = 0
                buf_l[npc] = leap
                npc += 1
            for m in range(k):
                buf_r[npc] = j
                buf_d[npc] = qlen[j, m]
                buf_p[npc] = qcnt[j, m]
                buf_l[npc] = leap
                npc += 1
            rest = qn[j] - k
            for m in range(rest):
                qlen[j, m] = qlen[j, m + k]
                qcnt[j, m] = qcnt[j, m + k]
            qn[j] = rest
        if leap >= leap_taus.shape[0]:
            grown = np.empty(2 * leap_taus.shape[0])
            grown[:leap] = leap_taus[:leap]
            leap_taus = grown
        leap_taus[leap] = step
        leap += 1
        t_new = t + step
        si = _fill_saved(saved, save_times, si, x, t_new - _SAVE_EPS)
        for i in range(N):
            x[i] = xn[i]
            if x[i] > COUNT_LIMIT:
                status = OVERFLOW
        t = t_new
        if status != OK:
            break
        crossing = _check_cross(x, watch, thresh, t, crossing)
        if full:
            pt, px = _grow_path(pt, px, n)
            pt[n] = t
            px[n] = x
            n += 1
    # pieces revealed beyond the final leap remain part of the recorded process
    need = npc
    for j in range(M):
        need += qn[j]
    if need > buf_r.shape[0]:
        buf_r, buf_d, buf_p, buf_l = _grow_pieces(buf_r, buf_d, buf_p, buf_l, npc, need)
    for j in range(M):
        for m in range(qn[j]):
            buf_r[npc] = j
            buf_d[npc] = qlen[j, m]
            buf_p[npc] = qcnt[j, m]
            buf_l[npc] = -1
            npc += 1
    _fill_saved(saved, save_times, si, x, np.inf)
    return (status, saved, pt[:n], px[:n], crossing, buf_r[:npc], buf_d[:npc],
            buf_p[:npc], buf_l[:npc], leap_taus[:leap])


# ---------------------------------------------------------------------------
# completion of recorded pieces and the time-change construction


@nb.njit(cache=True)
def complete_kernel(lengths, counts, s):
    """Place each piece's events as uniform order statistics inside the piece.

    ``lengths`` and ``counts`` are the pieces of one reaction in order.  The
    ``c`` sorted uniforms on ``(start, start + length]`` are generated from
    normalised partial sums of ``c + 1`` exponential spacings.
    """
    total = 0
    for i in range(counts.shape[0]):
        total += counts[i]
    out = np.empty(total)
    spacing = np.empty(64)
    start = 0.0
    k = 0
    for i in range(counts.shape[0]):
        c = counts[i]
        ell = lengths[i]
        if c > 0:
            if c + 1 > spacing.shape[0]:
                spacing = np.empty(2 * (c + 1))
            acc = 0.0
            for m in range(c + 1):
                acc += exponential(s)
                spacing[m] = acc
            for m in range(c):
                v = start + ell * (spacing[m] / acc)
                # guard the open left end of the interval against rounding
                if v <= start:
                    v = np.nextafter(start, np.inf)
                out[k] = v
                k += 1
        start += ell
    return out


@nb.njit(cache=True)
def map_kernel(points, offsets, horizon, x0, stoich, reac, rate, basal, hsp, hK, hn, T,
               save_times, full, watch, thresh, s):
    """Exact trajectory from per-reaction unit-rate Poisson processes.

    Reaction ``j`` fires whenever its integrated propensity reaches the next
    point of its process.  Once the known points are used up, further points
    are generated after the covered horizon with Exp(1) spacings.
    """
    N = x0.shape[0]
    M = rate.shape[0]
    x = x0.copy()
    a = np.empty(M)
    sigma = np.zeros(M)
    nextp = np.empty(M)
    ptr = np.empty(M, dtype=np.int64)
    last = horizon.copy()
    for j in range(M):
        ptr[j] = offsets[j]
        if ptr[j] < offsets[j + 1]:
            nextp[j] = points[ptr[j]]
            ptr[j] += 1
        else:
            last[j] += exponential(s)
            nextp[j] = last[j]
    saved = np.empty((save_times.shape[0], N), dtype=np.int64)
    si = 0
    cap = 1024 if full else 1
    pt = np.empty(cap)
    px = np.empty((cap, N), dtype=np.int64)
    n = 0
    if full:
        pt[0] = 0.0
        px[0] = x
        n = 1
    crossing = _check_cross(x, watch, thresh, 0.0, -1.0)
    t = 0.0
    n_events = 0
    status = OK
    while True:
        propensities(x, reac, rate, basal, hsp, hK, hn, a)
        best = np.inf
        J = -1
        for j in range(M):
            if a[j] > 0.0:
                w = (nextp[j] - sigma[j]) / a[j]
                if w < 0.0:
                    w = 0.0
                if w < best:
                    best = w
                    J = j
        if J < 0 or t + best > T:
            break
        t_new = t + best
        for j in range(M):
            sigma[j] += best * a[j]
        sigma[J] = nextp[J]
        if ptr[J] < offsets[J + 1]:
            nextp[J] = points[ptr[J]]
            ptr[J] += 1
        else:
            last[J] = max(last[J], nextp[J]) + exponential(s)
            nextp[J] = last[J]
        si = _fill_saved(saved, save_times, si, x, t_new)
        status = _apply(x, stoich, J, 1)
        t = t_new
        n_events += 1
        if status != OK:
            break
        crossing = _check_cross(x, watch, thresh, t, crossing)
        if full:
            pt, px = _grow_path(pt, px, n)
            pt[n] = t
            px[n] = x
            n += 1
    _fill_saved(saved, save_times, si, x, np.inf)
    return status, saved, pt[:n], px[:n], crossing, n_events


# ---------------------------------------------------------------------------
# hybrid scheme with one deterministic fast species


@nb.njit(cache=True)
def hybrid_wait(k_prod, k_decay, source, fast):
    """Deterministic wait before the fast species moves one step toward its mean.

    Returns ``(wait, direction)``; the wait is infinite when the fast
    species is within one molecule of ``k_prod * source / k_decay``.
    """
    if k_decay <= 0.0:
        return np.inf, 0
    delta = k_prod * source / k_decay - fast
    if abs(delta) <= 1.0:
        return np.inf, 0
    wait = -math.log(1.0 - 1.0 / abs(delta)) / k_decay
    return wait, 1 if delta > 0 else -1


@nb.njit(cache=True)
def hybrid_kernel(x0, stoich, reac, rate, basal, hsp, hK, hn, slow, src, fsp, k_prod, k_decay,
                  T, save_times, full, watch, thresh, s):
    """Slow reactions exactly, fast species by deterministic unit steps.

    Slow reactions keep internal clocks against Exp(1) targets, so the
    fired targets form exact unit-rate Poisson processes that can be reused
    by a coupled exact simulation.
    """
    N = x0.shape[0]
    M = rate.shape[0]
    x = x0.copy()
    a = np.empty(M)
    sigma = np.zeros(M)
    target = np.empty(M)
    for j in range(M):
        target[j] = exponential(s) if slow[j] else np.inf
    rec_r = np.empty(256, dtype=np.int64)
    rec_v = np.empty(256)
    nrec = 0
    saved = np.empty((save_times.shape[0], N), dtype=np.int64)
    si = 0
    cap = 1024 if full else 1
    pt = np.empty(cap)
    px = np.empty((cap, N), dtype=np.int64)
    n = 0
    if full:
        pt[0] = 0.0
        px[0] = x
        n = 1
    crossing = _check_cross(x, watch, thresh, 0.0, -1.0)
    t = 0.0
    wait, direction = hybrid_wait(k_prod, k_decay, x[src], x[fsp])
    t_det = t + wait
    n_events = 0
    status = OK
    while True:
        propensities(x, reac, rate, basal, hsp, hK, hn, a)
        best = t_det - t
        J = -1
        for j in range(M):
            if slow[j] and a[j] > 0.0:
                w = (target[j] - sigma[j]) / a[j]
                if w < 0.0:
                    w = 0.0
                if w < best:
                    best = w
                    J = j
        if best == np.inf or t + best > T:
            break
        t_new = t + best
        for j in range(M):
            if slow[j]:
                sigma[j] += best * a[j]
        si = _fill_saved(saved, save_times, si, x, t_new)
        t = t_new
        n_events += 1
        if J < 0:
            x[fsp] += direction
            wait, direction = hybrid_wait(k_prod, k_decay, x[src], x[fsp])
            t_det = t + wait
        else:
            sigma[J] = target[J]
            if nrec >= rec_r.shape[0]:
                nr = np.empty(2 * nrec, dtype=np.int64)
                nv = np.empty(2 * nrec)
                nr[:nrec] = rec_r[:nrec]
                nv[:nrec] = rec_v[:nrec]
                rec_r, rec_v = nr, nv
            rec_r[nrec] = J
            rec_v[nrec] = target[J]
            nrec += 1
            target[J] += exponential(s)
            status = _apply(x, stoich, J, 1)
            if status != OK:
                break
            if stoich[src, J] != 0 or stoich[fsp, J] != 0:
                wait, direction = hybrid_wait(k_prod, k_decay, x[src], x[fsp])
                t_det = t + wait
        crossing = _check_cross(x, watch, thresh, t, crossing)
        if full:
            pt, px = _grow_path(pt, px, n)
            pt[n] = t
            px[n] = x
            n += 1
    _fill_saved(saved, save_times, si, x, np.inf)
    return status, saved, pt[:n], px[:n], crossing, rec_r[:nrec], rec_v[:nrec], target, n_events
