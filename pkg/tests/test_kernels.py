import importlib

import numpy as np
import pytest

from backlink.kernels import KERNEL_BACKEND, pyfallback

try:
    from backlink.kernels import _native
except ImportError:
    _native = None


def random_inputs(rng, n_docs=40, n_postings=25):
    ords = np.sort(
        rng.choice(n_docs, size=min(n_postings, n_docs), replace=False)
    ).astype(np.uint32)
    tfs = rng.integers(1, 9, size=len(ords)).astype(np.uint32)
    norms = (0.3 + rng.random(n_docs) * 2.0).astype(np.float64)
    coef = float(rng.random() * 3.0)
    k1 = float(0.5 + rng.random())
    return ords, tfs, coef, k1, norms


def test_fallback_matches_formula():
    ords = np.array([0, 2], dtype=np.uint32)
    tfs = np.array([2, 1], dtype=np.uint32)
    norms = np.array([1.0, 1.0, 0.5], dtype=np.float64)
    scores = np.zeros(3)
    pyfallback.bm25_accumulate(ords, tfs, 2.0, 1.2, norms, scores)
    assert scores[0] == pytest.approx(2.0 * (2 * 2.2) / (2 + 1.0), abs=1e-12)
    assert scores[1] == 0.0
    assert scores[2] == pytest.approx(2.0 * (1 * 2.2) / (1 + 0.5), abs=1e-12)


def test_accumulation_adds_to_existing():
    ords = np.array([1], dtype=np.uint32)
    tfs = np.array([1], dtype=np.uint32)
    norms = np.ones(2)
    scores = np.zeros(2)
    pyfallback.bm25_accumulate(ords, tfs, 1.0, 1.0, norms, scores)
    once = scores[1]
    pyfallback.bm25_accumulate(ords, tfs, 1.0, 1.0, norms, scores)
    assert scores[1] == pytest.approx(2 * once, rel=1e-15)


@pytest.mark.skipif(_native is None, reason="compiled kernel not built")
def test_native_matches_fallback_bitwise():
    rng = np.random.default_rng(42)
    for _ in range(50):
        ords, tfs, coef, k1, norms = random_inputs(rng)
        a = np.zeros(len(norms))
        b = np.zeros(len(norms))
        _native.bm25_accumulate(ords, tfs, coef, k1, norms, a)
        pyfallback.bm25_accumulate(ords, tfs, coef, k1, norms, b)
        assert np.array_equal(a, b), "kernels must agree bit-for-bit"


def test_env_var_forces_fallback(monkeypatch):
    import backlink.kernels as kernels

    monkeypatch.setenv("BACKLINK_PURE_PYTHON", "1")
    reloaded = importlib.reload(kernels)
    try:
        assert reloaded.KERNEL_BACKEND == "python"
    finally:
        monkeypatch.delenv("BACKLINK_PURE_PYTHON")
        importlib.reload(kernels)


def test_selected_backend_reported():
    assert KERNEL_BACKEND in ("native", "python")
