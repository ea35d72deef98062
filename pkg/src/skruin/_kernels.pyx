# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trajectory kernels; same random map as ``_pykernels``."""

import numpy as np
cimport cython
from cython.parallel cimport prange
from libc.math cimport log, log1p
from libc.stdint cimport int32_t, int64_t, uint64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.0 / 9007199254740992.0
cdef double INV_LN2 = 1.4426950408889634
cdef int DRAWS_PER_SLOT = 4


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t key, int64_t draw) noexcept nogil:
    cdef uint64_t bits = mix64(key + <uint64_t>(draw + 1) * GOLDEN)
    return (<double>(bits >> 11) + 0.5) * TWO_M53


cdef inline uint64_t stream_key(uint64_t skey, int64_t trial) noexcept nogil:
    return mix64(skey + <uint64_t>(trial + 1) * GOLDEN)


cdef inline double slot_increment(uint64_t key, int64_t t, int scheme, double p,
                                  double gx, double gy, double gxt) noexcept nogil:
    cdef int64_t base = DRAWS_PER_SLOT * t
    cdef double x, y, xt
    if scheme == 0:
        x = -gx * log(uniform(key, base))
        y = -gy * log(uniform(key, base + 1))
        xt = -gxt * log(uniform(key, base + 2))
        return log1p(xt) * INV_LN2 - log1p(x / (1.0 + y)) * INV_LN2
    if uniform(key, base + 3) < p:
        return log1p(-gxt * log(uniform(key, base + 2))) * INV_LN2
    x = -gx * log(uniform(key, base))
    y = -gy * log(uniform(key, base + 1))
    return -(log1p(x / (1.0 + y)) * INV_LN2)


def seed_key(uint64_t seed):
    return mix64(seed + GOLDEN)


def outage_times(uint64_t seed, int64_t start, int64_t n, b0s, int t_max, int scheme,
                 double p, double gx, double gy, double gxt, int num_threads=1):
    cdef double[::1] b = np.ascontiguousarray(b0s, dtype=np.float64)
    cdef int nb = b.shape[0]
    out_arr = np.full((n, nb), t_max + 1, dtype=np.int32)
    cdef int32_t[:, ::1] out = out_arr
    cdef uint64_t skey = mix64(seed + GOLDEN)
    cdef int64_t i
    cdef int t, j, remaining
    cdef double s, bmax = -1e300
    cdef uint64_t key
    for j in range(nb):
        if b[j] > bmax:
            bmax = b[j]
    for i in prange(n, nogil=True, schedule="static", num_threads=num_threads):
        key = stream_key(skey, start + i)
        remaining = 0
        for j in range(nb):
            if b[j] <= 0:
                out[i, j] = 0
            else:
                remaining = remaining + 1
        s = 0.0
        t = 0
        while t < t_max and remaining > 0:
            s = s + slot_increment(key, t, scheme, p, gx, gy, gxt)
            t = t + 1
            for j in range(nb):
                if out[i, j] == t_max + 1 and s >= b[j]:
                    out[i, j] = t
                    remaining = remaining - 1
    return out_arr


def increments(uint64_t seed, int64_t start, int64_t n, int t_max, int scheme,
               double p, double gx, double gy, double gxt, int num_threads=1):
    out_arr = np.empty((n, t_max), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef uint64_t skey = mix64(seed + GOLDEN)
    cdef int64_t i
    cdef int t
    cdef uint64_t key
    for i in prange(n, nogil=True, schedule="static", num_threads=num_threads):
        key = stream_key(skey, start + i)
        for t in range(t_max):
            out[i, t] = slot_increment(key, t, scheme, p, gx, gy, gxt)
    return out_arr


def hitting_times(uint64_t seed, int64_t start, int64_t n, double b0, double gx, double gy,
                  int64_t max_slots, int num_threads=1):
    out_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    if b0 <= 0:
        return out_arr
    cdef uint64_t skey = mix64(seed + GOLDEN)
    cdef int64_t i, t, base
    cdef double s, x, y
    cdef uint64_t key
    for i in prange(n, nogil=True, schedule="static", num_threads=num_threads):
        key = stream_key(skey, start + i)
        s = 0.0
        t = 0
        while s < b0 and t < max_slots:
            base = DRAWS_PER_SLOT * t
            x = -gx * log(uniform(key, base))
            y = -gy * log(uniform(key, base + 1))
            s = s + log1p(x / (1.0 + y)) * INV_LN2
            t = t + 1
        if s >= b0:
            out[i] = t
        else:
            out[i] = max_slots + 1
    return out_arr
