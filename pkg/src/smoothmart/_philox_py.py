"""Pure-numpy Philox4x32-10, the fallback for the compiled ``_philox`` module.

Every output is addressed by a counter ``(index_lo, index_hi, time, tag)`` under
the key ``(seed_lo, seed_hi)``, so any element can be generated independently.
"""
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_TWO_PI = 2.0 * np.pi

BACKEND = "python"


def _rounds(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _S32) ^ c1 ^ np.uint64(k0),
            p1 & _MASK,
            (p0 >> _S32) ^ c3 ^ np.uint64(k1),
            p0 & _MASK,
        )
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def philox_raw(counter, key):
    """One Philox4x32-10 block: four 32-bit words -> four 32-bit words."""
    c = [np.uint64(int(x) & 0xFFFFFFFF) for x in counter]
    out = _rounds(*c, int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF)
    return tuple(int(x) for x in out)


def normal_block(seed, tag, sample_start, n_samples, time_start, n_times):
    """Standard normals, shape ``(n_samples, n_times)``.

    Entry ``[i, j]`` depends only on ``(seed, tag, sample_start + i, time_start + j)``.
    """
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    idx = np.uint64(sample_start) + np.arange(n_samples, dtype=np.uint64)
    tim = np.uint64(time_start) + np.arange(n_times, dtype=np.uint64)
    c0 = np.broadcast_to((idx & _MASK)[:, None], (n_samples, n_times))
    c1 = np.broadcast_to((idx >> _S32)[:, None], (n_samples, n_times))
    c2 = np.broadcast_to(tim[None, :], (n_samples, n_times))
    c3 = np.full((n_samples, n_times), np.uint64(int(tag) & 0xFFFFFFFF))
    x0, x1, x2, x3 = _rounds(c0, c1, c2, c3, seed & 0xFFFFFFFF, seed >> 32)
    a = ((x0 << _S32) | x1) >> np.uint64(11)
    b = ((x2 << _S32) | x3) >> np.uint64(11)
    u1 = (a.astype(np.float64) + 0.5) * 2.0**-53
    u2 = (b.astype(np.float64) + 0.5) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
