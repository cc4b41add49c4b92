"""Compiled kernels against the NumPy fallback and a dense reference."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracpmp import _kernels_py, kernels

BACKENDS = [_kernels_py]
try:
    from fracpmp import _kernels
    BACKENDS.append(_kernels)
except ImportError:
    pass


def dense_toeplitz(coef, x):
    N1 = x.shape[0]
    out = np.zeros_like(x)
    for n in range(N1):
        for j in range(n):
            out[n] += coef[n - j] * x[j]
    return out


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.split(".")[-1])
@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_toeplitz_matches_dense(mod, N1, d, seed):
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=N1)
    x = rng.normal(size=(N1, d))
    np.testing.assert_allclose(mod.lower_toeplitz_apply(coef, x),
                               dense_toeplitz(coef, x), atol=1e-12)


def naive_march(coef, A, Ad, r, m, base, hist):
    N1, n = r.shape
    y = np.zeros((N1, n))
    F = np.zeros((N1, n))
    for k in range(N1):
        y[k] = base[k] + sum((coef[k - j] * F[j] for j in range(k)), np.zeros(n))
        yd = y[k - m] if k >= m else hist[k]
        F[k] = A[k] @ y[k] + Ad[k] @ yd + r[k]
    return y


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.split(".")[-1])
@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.integers(1, 3), st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_march_matches_naive(mod, N1, n, m, seed):
    rng = np.random.default_rng(seed)
    coef = np.abs(rng.normal(size=N1)) * 0.1
    A = rng.normal(size=(N1, n, n))
    Ad = rng.normal(size=(N1, n, n))
    r = rng.normal(size=(N1, n))
    base = rng.normal(size=(N1, n))
    hist = rng.normal(size=(m + 1, n))
    y, bad = mod.march_linear(coef, A, Ad, r, m, base, hist, 1e12)
    assert bad == -1
    np.testing.assert_allclose(np.asarray(y), naive_march(coef, A, Ad, r, m, base, hist),
                               rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.split(".")[-1])
def test_march_reports_first_blowup_node(mod):
    N1 = 50
    coef = np.full(N1, 1.0)
    coef[0] = 0
    A = np.full((N1, 1, 1), 10.0)
    y, bad = mod.march_linear(coef, A, np.zeros((N1, 1, 1)), np.zeros((N1, 1)), 3,
                              np.ones((N1, 1)), np.zeros((4, 1)), 1e6)
    y = np.asarray(y)
    assert bad > 0
    assert abs(y[bad, 0]) > 1e6 and np.all(np.abs(y[:bad]) <= 1e6)


def test_selected_backend_is_reported():
    import os
    assert kernels.BACKEND in ("cython", "python")
    if os.environ.get("FRACPMP_PURE_PYTHON") == "1":
        assert kernels.BACKEND == "python"
    elif len(BACKENDS) == 2:
        assert kernels.BACKEND == "cython"


def test_env_var_forces_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, FRACPMP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import fracpmp; print(fracpmp.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
