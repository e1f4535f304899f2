"""xoshiro256** generator and variate samplers for use inside numba kernels.

numba's built-in ``np.random`` can only be seeded with a 32-bit integer,
which is too small to give every Monte Carlo index its own stream.  The
kernels therefore carry an explicit 256-bit state array seeded from a
numpy ``Generator``.
"""

import math

import numba as nb
import numpy as np

_U53 = 1.0 / 9007199254740992.0


def seed_state(rng):
    """Draw a fresh 256-bit kernel state from a numpy Generator."""
    state = rng.integers(0, 2**64, size=4, dtype=np.uint64, endpoint=False)
    if not state.any():
        state[0] = np.uint64(0x9E3779B97F4A7C15)
    return state


@nb.njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@nb.njit(cache=True)
def next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@nb.njit(cache=True)
def uniform(s):
    """Uniform on [0, 1)."""
    return float(next_u64(s) >> np.uint64(11)) * _U53


@nb.njit(cache=True)
def exponential(s):
    return -math.log(1.0 - uniform(s))


@nb.njit(cache=True)
def poisson(s, lam):
    if lam <= 0.0:
        return 0
    if lam < 10.0:
        # multiplication method
        enlam = math.exp(-lam)
        k = 0
        prod = 1.0
        while True:
            prod *= uniform(s)
            if prod > enlam:
                k += 1
            else:
                return k
    # transformed rejection with squeeze (Hormann 1993)
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = uniform(s) - 0.5
        v = uniform(s)
        us = 0.5 - abs(u)
        if us <= 0.0:
            continue
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if v > 0.0 and (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                        <= -lam + k * loglam - math.lgamma(k + 1.0)):
            return int(k)


@nb.njit(cache=True)
def binomial(s, n, p):
    # only used when a leap is split, where n is small
    if p <= 0.0 or n <= 0:
        return 0
    if p >= 1.0:
        return n
    k = 0
    for _ in range(n):
        if uniform(s) < p:
            k += 1
    return k


@nb.njit(cache=True)
def _fill_uniform(s, out):
    for i in range(out.shape[0]):
        out[i] = uniform(s)


@nb.njit(cache=True)
def _fill_poisson(s, lam, out):
    for i in range(out.shape[0]):
        out[i] = poisson(s, lam)


@nb.njit(cache=True)
def _fill_binomial(s, n, p, out):
    for i in range(out.shape[0]):
        out[i] = binomial(s, n, p)


def draw_uniform(rng, size):
    """Vector of kernel uniforms; exposed for testing the samplers."""
    out = np.empty(size)
    _fill_uniform(seed_state(rng), out)
    return out


def draw_poisson(rng, lam, size):
    out = np.empty(size, dtype=np.int64)
    _fill_poisson(seed_state(rng), float(lam), out)
    return out


def draw_binomial(rng, n, p, size):
    out = np.empty(size, dtype=np.int64)
    _fill_binomial(seed_state(rng), int(n), float(p), out)
    return out
