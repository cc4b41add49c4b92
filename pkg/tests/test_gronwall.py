import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracpmp import Divergence, GronwallData, InvalidArgument, grid_make, picard_bound
from fracpmp.gronwall import apply_operator


def weights(alpha, dt, N):
    l = np.arange(N + 1, dtype=float)
    w = dt ** alpha / alpha * (l ** alpha - np.maximum(l - 1, 0) ** alpha)
    w[0] = 0.0
    return w


def simulate(a, L, alpha, grid, slack=None):
    """Plain loop for ``y_n = a_n - e_n + sum_{j<n} w_{n-j} L_j (y_j + y_{j-m})``."""
    N, m = grid.N, grid.m
    w = weights(alpha, grid.dt, N)
    e = np.zeros(N + 1) if slack is None else slack
    y = np.zeros(N + 1)
    for n in range(N + 1):
        s = 0.0
        for j in range(n):
            s += w[n - j] * L[j] * (y[j] + (y[j - m] if j >= m else 0.0))
        y[n] = a[n] - e[n] + s
    return y


def test_zero_coupling_returns_a():
    g = grid_make(1.0, 0.5, 32)
    a = np.linspace(0, 2, g.N + 1)
    np.testing.assert_array_equal(picard_bound(GronwallData(a, np.zeros_like(a), 0.5, g.m), g), a)


def test_zero_forcing_returns_zero():
    g = grid_make(1.0, 0.5, 32)
    z = np.zeros(g.N + 1)
    assert np.all(picard_bound(GronwallData(z, np.ones_like(z), 0.5, g.m), g) == 0)


def test_dominates_equality_solution():
    g = grid_make(1.0, 0.5, 256)
    a = np.ones(g.N + 1)
    L = np.ones(g.N + 1)
    B = picard_bound(GronwallData(a, L, 0.5, g.m), g)
    y = simulate(a, L, 0.5, g)
    assert np.all(B - y >= -1e-9 * np.maximum(1.0, y))
    assert np.all(B >= a)


def test_fixed_point_residual():
    g = grid_make(1.0, 0.5, 128)
    rng = np.random.default_rng(3)
    d = GronwallData(rng.uniform(0, 1, g.N + 1), rng.uniform(0, 2, g.N + 1), 0.4, g.m)
    B = picard_bound(d, g)
    assert np.all(apply_operator(d, g, B) <= B + 1e-10 * np.maximum(1.0, B))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), alpha=st.floats(0.3, 1.0))
def test_domination_of_inequality_solutions(seed, alpha):
    # L is kept moderate: for small alpha the bound grows like E_alpha(L Gamma(alpha) t^alpha)
    g = grid_make(1.0, 0.25, 16)
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 2, g.N + 1)
    L = rng.uniform(0, 1, g.N + 1)
    B = picard_bound(GronwallData(a, L, alpha, g.m), g)
    y = simulate(a, L, alpha, g, slack=rng.uniform(0, 1, g.N + 1) * a)
    assert np.all(y <= B + 1e-9 * np.maximum(1.0, B))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), j=st.integers(0, 32), bump=st.floats(0.0, 1.0))
def test_monotone_in_data(seed, j, bump):
    g = grid_make(1.0, 0.25, 8)
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 1, g.N + 1)
    L = rng.uniform(0, 2, g.N + 1)
    base = picard_bound(GronwallData(a, L, 0.5, g.m), g)
    a2, L2 = a.copy(), L.copy()
    a2[j] += bump
    L2[j] += bump
    assert np.all(picard_bound(GronwallData(a2, L, 0.5, g.m), g) >= base)
    assert np.all(picard_bound(GronwallData(a, L2, 0.5, g.m), g) >= base)


def test_alpha_one_matches_discrete_exponential():
    # with a = 1, L = c and no delay influence before m, b_n = (1 + c dt)^n
    g = grid_make(0.5, 0.5, 64)
    c = 0.7
    d = GronwallData(np.ones(g.N + 1), np.full(g.N + 1, c), 1.0, g.m)
    B = picard_bound(d, g)
    n = np.arange(g.N)
    np.testing.assert_allclose(B[:-1], (1 + c * g.dt) ** n, rtol=1e-12)


def test_divergence():
    g = grid_make(2.0, 0.5, 64)
    d = GronwallData(np.ones(g.N + 1), np.full(g.N + 1, 1e4), 0.5, g.m)
    with pytest.raises(Divergence):
        picard_bound(d, g)


@pytest.mark.parametrize("a,L,alpha,m", [
    ([1.0, -1.0], [0.0, 0.0], 0.5, 1),
    ([1.0, 1.0], [0.0, -0.1], 0.5, 1),
    ([1.0], [0.0, 0.0], 0.5, 1),
    ([1.0], [0.0], 1.5, 1),
    ([1.0], [0.0], 0.5, 0),
])
def test_validation(a, L, alpha, m):
    with pytest.raises(InvalidArgument):
        GronwallData(a, L, alpha, m)


def test_shape_mismatch_with_grid():
    g = grid_make(1.0, 0.5, 8)
    with pytest.raises(InvalidArgument):
        picard_bound(GronwallData(np.ones(5), np.ones(5), 0.5, g.m), g)
    assert math.isfinite(picard_bound(GronwallData(np.ones(g.N + 1), np.ones(g.N + 1), 0.5, g.m), g)[-1])
