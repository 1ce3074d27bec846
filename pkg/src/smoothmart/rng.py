"""Counter-based normal streams keyed by ``(seed, tag, sample, time)``.

The compiled backend is used when it imports; set ``SMOOTHMART_PURE_PYTHON=1``
to force the numpy implementation.  Both produce the same streams (to the
last ulp or so, since ``log``/``cos`` come from different libraries).
"""
import os

from . import _philox_py

if os.environ.get("SMOOTHMART_PURE_PYTHON", "") not in ("", "0"):
    _impl = _philox_py
else:
    try:
        from . import _philox as _impl
    except ImportError:  # extension not built
        _impl = _philox_py

BACKEND = _impl.BACKEND

# stream tags keep unrelated draws apart under one seed
TAG_PATH_PREFIX = 0
TAG_CONTINUATION = 1
TAG_STEP_INCREMENT = 2


def philox_raw(counter, key):
    return _impl.philox_raw(counter, key)


def normal_block(seed: int, tag: int, sample_start: int, n_samples: int, time_start: int, n_times: int, backend=None):
    """Normals of shape ``(n_samples, n_times)`` for the given key window."""
    impl = _impl if backend is None else {"python": _philox_py, "cython": _compiled()}[backend]
    return impl.normal_block(seed, tag, sample_start, n_samples, time_start, n_times)


def _compiled():
    from . import _philox

    return _philox
