import numpy as np
import pytest
from hypothesis import given, strategies as st

from cwc import _kernels

pytestmark = pytest.mark.skipif(_kernels.numba_impl is None, reason="numba unavailable")


@given(st.integers(0, 2**31))
def test_soft_threshold_paths_agree(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((17, 4))
    lam = rng.random(4)
    inv = 1 + rng.random(17)
    ref = np.sign(a) * np.maximum(np.abs(a) - lam[None, :] * inv[:, None], 0)
    assert np.allclose(_kernels.numpy_impl.soft_threshold_cols(a, lam, inv), ref)
    assert np.allclose(_kernels.numba_impl.soft_threshold_cols(a, lam, inv), ref)


def test_tridiag_minres_paths_agree():
    n = 200
    rng = np.random.default_rng(0)
    d = -2.0 * np.ones(n) - rng.random(n)
    e = np.ones(n - 1)
    b = rng.standard_normal(n)
    T = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    exact = np.linalg.solve(T + 0.3 * np.eye(n), b)
    for impl in (_kernels.numpy_impl, _kernels.numba_impl):
        x = impl.tridiag_minres(d, e, 0.3, b, 1e-12, 10 * n)[0]
        assert np.allclose(x, exact, atol=1e-8)


def test_sequential_inclusion_paths_agree():
    p = np.array([0.4, 0.3, 0.2, 0.1])
    u = np.random.default_rng(0).random((500, 2))
    a = _kernels.numpy_impl.sequential_inclusion(p, 2, u)
    b = _kernels.numba_impl.sequential_inclusion(p, 2, u)
    assert np.array_equal(a, b) and a.sum() == 1000


def test_shift_inclusion_paths_agree():
    levels = np.sort(np.random.default_rng(1).random(50)) * 10
    mult = np.ones(50, dtype=np.int64)
    u = np.random.default_rng(2).random((100, 200))
    a = _kernels.numpy_impl.shift_inclusion(levels, mult, 10.0, 8, u)
    b = _kernels.numba_impl.shift_inclusion(levels, mult, 10.0, 8, u)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


def test_env_flag_disables_numba(monkeypatch):
    import subprocess
    import sys

    code = "from cwc import _kernels; print(_kernels.active().name)"
    env = dict(__import__("os").environ, CWC_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numpy"
