import numpy as np
import pytest
from scipy import stats

from smoothmart import _philox_py, rng

# Random123 known-answer vectors for philox4x32-10
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


def _backends():
    out = ["python"]
    try:
        from smoothmart import _philox  # noqa: F401
        out.append("cython")
    except ImportError:
        pass
    return out


@pytest.mark.parametrize("ctr,key,expected", KAT)
def test_known_answers_python(ctr, key, expected):
    assert tuple(int(x) for x in _philox_py.philox_raw(ctr, key)) == expected


@pytest.mark.parametrize("ctr,key,expected", KAT)
def test_known_answers_compiled(ctr, key, expected):
    _philox = pytest.importorskip("smoothmart._philox")
    assert tuple(int(x) for x in _philox.philox_raw(ctr, key)) == expected


def test_backends_agree():
    if "cython" not in _backends():
        pytest.skip("extension not built")
    a = rng.normal_block(11, rng.TAG_CONTINUATION, 5, 300, 2, 7, backend="python")
    b = rng.normal_block(11, rng.TAG_CONTINUATION, 5, 300, 2, 7, backend="cython")
    assert np.max(np.abs(a - b)) < 1e-14


@pytest.mark.parametrize("backend", _backends())
def test_blocks_are_addressable(backend):
    # any sub-block equals the matching slice of a larger block
    big = rng.normal_block(3, rng.TAG_CONTINUATION, 0, 50, 0, 10, backend=backend)
    sub = rng.normal_block(3, rng.TAG_CONTINUATION, 20, 10, 4, 3, backend=backend)
    assert np.array_equal(big[20:30, 4:7], sub)


def test_streams_differ_by_seed_and_tag():
    a = rng.normal_block(1, rng.TAG_CONTINUATION, 0, 10, 0, 1)
    assert not np.array_equal(a, rng.normal_block(2, rng.TAG_CONTINUATION, 0, 10, 0, 1))
    assert not np.array_equal(a, rng.normal_block(1, rng.TAG_STEP_INCREMENT, 0, 10, 0, 1))


def test_normality():
    z = rng.normal_block(2024, rng.TAG_CONTINUATION, 0, 20000, 0, 2).ravel()
    assert stats.kstest(z, "norm").pvalue > 1e-3
    assert abs(z.mean()) < 0.03 and abs(z.std() - 1) < 0.03


def test_forced_fallback(monkeypatch):
    import importlib

    monkeypatch.setenv("SMOOTHMART_PURE_PYTHON", "1")
    mod = importlib.reload(rng)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("SMOOTHMART_PURE_PYTHON")
        importlib.reload(rng)
