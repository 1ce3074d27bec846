# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Philox4x32-10 normal generator (same streams as _philox_py)."""
import numpy as np

from libc.math cimport cos, log, sqrt
from libc.stdint cimport uint32_t, uint64_t

BACKEND = "cython"

cdef double TWO_PI = 6.283185307179586
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline void _rounds(uint32_t* c, uint32_t k0, uint32_t k1) noexcept nogil:
    cdef uint64_t p0, p1
    cdef uint32_t x0, x2
    cdef int r
    for r in range(10):
        p0 = <uint64_t>0xD2511F53u * c[0]
        p1 = <uint64_t>0xCD9E8D57u * c[2]
        x0 = (<uint32_t>(p1 >> 32)) ^ c[1] ^ k0
        x2 = (<uint32_t>(p0 >> 32)) ^ c[3] ^ k1
        c[0] = x0
        c[1] = <uint32_t>p1
        c[2] = x2
        c[3] = <uint32_t>p0
        k0 = k0 + 0x9E3779B9u
        k1 = k1 + 0xBB67AE85u


def philox_raw(counter, key):
    cdef uint32_t c[4]
    cdef int i
    for i in range(4):
        c[i] = <uint32_t>(int(counter[i]) & 0xFFFFFFFF)
    _rounds(c, <uint32_t>(int(key[0]) & 0xFFFFFFFF), <uint32_t>(int(key[1]) & 0xFFFFFFFF))
    return (c[0], c[1], c[2], c[3])


def normal_block(seed, tag, sample_start, Py_ssize_t n_samples, time_start, Py_ssize_t n_times):
    cdef uint64_t s = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint32_t k0 = <uint32_t>(s & 0xFFFFFFFFu)
    cdef uint32_t k1 = <uint32_t>(s >> 32)
    cdef uint32_t tg = <uint32_t>(int(tag) & 0xFFFFFFFF)
    cdef uint64_t i0 = <uint64_t>int(sample_start)
    cdef uint64_t t0 = <uint64_t>int(time_start)
    out = np.empty((n_samples, n_times), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef uint32_t c[4]
    cdef uint64_t idx, a, b
    cdef Py_ssize_t i, j
    cdef double u1, u2
    with nogil:
        for i in range(n_samples):
            idx = i0 + <uint64_t>i
            for j in range(n_times):
                c[0] = <uint32_t>(idx & 0xFFFFFFFFu)
                c[1] = <uint32_t>(idx >> 32)
                c[2] = <uint32_t>(t0 + <uint64_t>j)
                c[3] = tg
                _rounds(c, k0, k1)
                a = ((<uint64_t>c[0] << 32) | c[1]) >> 11
                b = ((<uint64_t>c[2] << 32) | c[3]) >> 11
                u1 = (<double>a + 0.5) * INV53
                u2 = (<double>b + 0.5) * INV53
                o[i, j] = sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)
    return out
