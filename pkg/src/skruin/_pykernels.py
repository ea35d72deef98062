"""Pure numpy trajectory kernels.

Every random number is a function of ``(seed, trial, draw)`` only: a
SplitMix64 substream keyed per trial, with four draws per slot
(main SNR, eavesdropper SNR, transmission SNR, transmit/generate coin).
The compiled kernels in ``_kernels.pyx`` implement the same map.
"""

import numpy as np

_GOLDEN_INT = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1
GOLDEN = np.uint64(_GOLDEN_INT)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_TWO_M53 = 2.0**-53
INV_LN2 = 1.0 / np.log(2.0)

DRAWS_PER_SLOT = 4
SCHEME_DETERMINISTIC = 0
SCHEME_RANDOM = 1


def mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    # wraparound is the intended modulo 2**64 arithmetic
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def seed_key(seed):
    return mix64(np.array([(seed + _GOLDEN_INT) & _MASK64], dtype=np.uint64))[0]


def stream_keys(seed, start, n):
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(seed_key(seed) + idx * GOLDEN)


def uniforms(keys, draw):
    """Uniform variates in (0, 1) for draw index ``draw`` of each substream."""
    offset = np.uint64(((draw + 1) * _GOLDEN_INT) & _MASK64)
    bits = mix64(keys + offset)
    return ((bits >> _S11).astype(np.float64) + 0.5) * _TWO_M53


def _slot_increment(keys, t, scheme, p, gx, gy, gxt):
    base = DRAWS_PER_SLOT * t
    if scheme == SCHEME_DETERMINISTIC:
        x = -gx * np.log(uniforms(keys, base))
        y = -gy * np.log(uniforms(keys, base + 1))
        xt = -gxt * np.log(uniforms(keys, base + 2))
        return np.log1p(xt) * INV_LN2 - np.log1p(x / (1.0 + y)) * INV_LN2
    tx = uniforms(keys, base + 3) < p
    z = np.empty(keys.shape)
    k = keys[tx]
    z[tx] = np.log1p(-gxt * np.log(uniforms(k, base + 2))) * INV_LN2
    k = keys[~tx]
    x = -gx * np.log(uniforms(k, base))
    y = -gy * np.log(uniforms(k, base + 1))
    z[~tx] = -(np.log1p(x / (1.0 + y)) * INV_LN2)
    return z


def outage_times(seed, start, n, b0s, t_max, scheme, p, gx, gy, gxt):
    """First slot with ``B_t <= 0`` for each trial and initial budget.

    Returns an ``(n, len(b0s))`` int32 array; ``0`` for ``b0 <= 0`` and
    ``t_max + 1`` for trajectories that survive the horizon.
    """
    b0s = np.asarray(b0s, dtype=np.float64)
    keys = stream_keys(seed, start, n)
    out = np.full((n, b0s.size), t_max + 1, dtype=np.int32)
    out[:, b0s <= 0] = 0
    s = np.zeros(n)
    for t in range(t_max):
        s = s + _slot_increment(keys, t, scheme, p, gx, gy, gxt)
        hit = (s[:, None] >= b0s[None, :]) & (out == t_max + 1)
        out[hit] = t + 1
    return out


def increments(seed, start, n, t_max, scheme, p, gx, gy, gxt):
    keys = stream_keys(seed, start, n)
    out = np.empty((n, t_max))
    for t in range(t_max):
        out[:, t] = _slot_increment(keys, t, scheme, p, gx, gy, gxt)
    return out


def hitting_times(seed, start, n, b0, gx, gy, max_slots):
    """Slots of key generation needed to accumulate ``b0`` bits (0 if ``b0 <= 0``)."""
    keys = stream_keys(seed, start, n)
    out = np.zeros(n, dtype=np.int64)
    if b0 <= 0:
        return out
    s = np.zeros(n)
    active = np.arange(n)
    t = 0
    while active.size and t < max_slots:
        k = keys[active]
        base = DRAWS_PER_SLOT * t
        x = -gx * np.log(uniforms(k, base))
        y = -gy * np.log(uniforms(k, base + 1))
        s[active] = s[active] + np.log1p(x / (1.0 + y)) * INV_LN2
        t += 1
        done = s[active] >= b0
        out[active[done]] = t
        active = active[~done]
    out[active] = max_slots + 1
    return out
