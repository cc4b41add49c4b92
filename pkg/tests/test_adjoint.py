import math

import numpy as np
import pytest
from problems import example4_problem, linear_fdde, random_linear_fdde, scalar_vide
from scipy.integrate import solve_ivp

from fracpmp import (AdjointSourceConvention, ControlSignal, delayed_power_series, duality_gap,
                     fractional_ibp_sides, grid_make, solve_adjoint_fdde, solve_adjoint_vide,
                     solve_fdde, solve_variational, solve_vide)
from fracpmp.adjoint import adjoint_fdde_from_jacobians
from fracpmp.example4 import convention_costate

SHIFTED = AdjointSourceConvention.SHIFTED_INDICATOR
DISPLAYED = AdjointSourceConvention.AS_DISPLAYED


def _solve(P, g, u=0.0):
    u = ControlSignal.constant(g, [u])
    return solve_fdde(P, u, g), u


def test_zero_sources_give_zero_costate():
    P = linear_fdde(0.5, 1.0, 0.5, [[1.0]], [[2.0]], [[1.0]])
    g = grid_make(1.0, 0.5, 16)
    y, u = _solve(P, g)
    psi = solve_adjoint_fdde(P, y, u, g)
    assert np.all(psi.values == 0)
    assert np.all(psi.eval(1.2) == 0)


@pytest.mark.parametrize("conv", [SHIFTED, DISPLAYED])
def test_constant_source_on_tail(conv):
    c = 1.7
    P = linear_fdde(0.5, 1.0, 0.5, [[0.0]], [[0.0]], [[1.0]], c_y=[c])
    g = grid_make(1.0, 0.5, 512)
    y, u = _solve(P, g)
    psi = solve_adjoint_fdde(P, y, u, g, conv)
    tail = g.t > g.T - g.h
    exact = -c * (g.T - g.t) ** 0.5 / math.gamma(1.5)
    assert np.max(np.abs(psi.values[tail, 0] - exact[tail])) <= 2e-3


def test_source_conventions_differ_only_through_delayed_cost():
    g = grid_make(2.0, 0.5, 32)
    P0 = linear_fdde(0.5, 2.0, 0.5, [[0.1]], [[0.3]], [[1.0]], c_y=[1.0])
    y, u = _solve(P0, g)
    assert np.array_equal(solve_adjoint_fdde(P0, y, u, g, SHIFTED).values,
                          solve_adjoint_fdde(P0, y, u, g, DISPLAYED).values)
    P1 = linear_fdde(0.5, 2.0, 0.5, [[0.1]], [[0.3]], [[1.0]], c_yh=[1.0])
    assert not np.allclose(solve_adjoint_fdde(P1, y, u, g, SHIFTED).values,
                           solve_adjoint_fdde(P1, y, u, g, DISPLAYED).values)


@pytest.mark.parametrize("name,M,W", [
    ("transposed", np.array([[0.0, 0.0], [1.0, 0.0]]), np.array([-1.0, -1.0])),
    ("plain", np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([-1.0, 1.0])),
])
def test_costate_series_for_each_reading(name, M, W):
    g = grid_make(2.0, 0.5, 128)
    phi = convention_costate(g, M, W)
    assert np.max(np.abs(phi - delayed_power_series(M, W, 0.5, 0.5, g.t))) <= 5e-3


def test_derived_costate_of_pure_delay_example():
    P = example4_problem(128)
    g = grid_make(2.0, 0.5, 128)
    y, u = _solve(P, g, 0.5)
    psi = solve_adjoint_fdde(P, y, u, g)
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    ref = delayed_power_series(A.T, [-1.0, 1.0], 0.5, 0.5, g.T - g.t - g.h)
    assert np.max(np.abs(psi.values - ref)) <= 5e-3


def test_alpha_one_matches_delayed_adjoint_ode():
    A = np.array([[-0.5, 1.0], [0.3, -0.2]])
    Ad = np.array([[0.2, -0.4], [0.5, 0.1]])
    cy, cyh = np.array([1.0, -0.5]), np.array([0.3, 0.8])
    T, h = 1.0, 0.25
    g = grid_make(T, h, 512)
    N = g.N
    psi = adjoint_fdde_from_jacobians(1.0, g, np.broadcast_to(A, (N + 1, 2, 2)),
                                      np.broadcast_to(Ad, (N + 1, 2, 2)),
                                      np.broadcast_to(cy, (N + 1, 2)),
                                      np.broadcast_to(cyh, (N + 1, 2)))
    # reversed time: phi' = A^T phi + [tau > h] (Ad^T phi(tau - h) - cyh) - cy
    segs = []

    def past(tau):
        if tau <= 0:
            return np.zeros(2)
        return segs[min(int(tau // h), len(segs) - 1)].sol(tau)

    x0 = np.zeros(2)
    for k in range(int(round(T / h))):
        on = 1.0 if k >= 1 else 0.0
        sol = solve_ivp(lambda s, x: A.T @ x + on * (Ad.T @ past(s - h) - cyh) - cy,
                        (k * h, (k + 1) * h), x0, dense_output=True, rtol=1e-11, atol=1e-13)
        segs.append(sol)
        x0 = sol.y[:, -1]
    ref = np.array([past(T - t) if t < T else np.zeros(2) for t in g.t])
    assert np.max(np.abs(psi.values - ref)) <= 1e-3


def test_costate_linear_in_sources():
    g = grid_make(1.0, 0.25, 64)
    rng = np.random.default_rng(2)
    A, Ad = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    N = g.N
    fy, fyh = np.broadcast_to(A, (N + 1, 2, 2)), np.broadcast_to(Ad, (N + 1, 2, 2))
    s1, s2 = rng.normal(size=(N + 1, 2)), rng.normal(size=(N + 1, 2))
    r1, r2 = rng.normal(size=(N + 1, 2)), rng.normal(size=(N + 1, 2))
    p1 = adjoint_fdde_from_jacobians(0.6, g, fy, fyh, s1, r1).values
    p2 = adjoint_fdde_from_jacobians(0.6, g, fy, fyh, s2, r2).values
    p12 = adjoint_fdde_from_jacobians(0.6, g, fy, fyh, 2 * s1 - s2, 2 * r1 - r2).values
    np.testing.assert_allclose(p12, 2 * p1 - p2, rtol=1e-11, atol=1e-12)


# --- Volterra costate ---------------------------------------------------------


def test_vide_zero_sources():
    P = scalar_vide(0.0)
    g = grid_make(1.0, 0.5, 16)
    u = ControlSignal.constant(g, [0.0])
    psi = solve_adjoint_vide(P, solve_vide(P, u, g), u, g)
    assert np.all(psi.values == 0)


def test_vide_constant_source_read_off():
    P = scalar_vide(0.0, c=2.5)
    g = grid_make(1.0, 0.5, 16)
    u = ControlSignal.constant(g, [0.0])
    psi = solve_adjoint_vide(P, solve_vide(P, u, g), u, g)
    assert np.all(psi.values == -2.5)


def picard_backward(a, c, alpha, T, t, sweeps=20):
    """Closed-form Picard sweeps of ``phi = -c + a int_0^tau (tau-s)^(alpha-1) phi``."""
    tau = T - t
    term = np.full_like(tau, -c)
    terms = term.copy()
    for k in range(1, sweeps + 1):
        term = term * a * math.gamma(alpha) * tau ** alpha * math.gamma((k - 1) * alpha + 1) / math.gamma(k * alpha + 1)
        terms += term
    return terms


@pytest.mark.parametrize("fast", [True, False])
def test_vide_linear_kernel_against_picard(fast):
    a, c = 0.5, 1.0
    P = scalar_vide(a, c=c, fast=fast)
    g = grid_make(1.0, 0.5, 512 if fast else 64)
    u = ControlSignal.constant(g, [0.0])
    psi = solve_adjoint_vide(P, solve_vide(P, u, g), u, g)
    ref = picard_backward(a, c, 0.5, 1.0, g.t)
    tol = 5e-3 if fast else 4e-2
    assert np.max(np.abs(psi.values[:, 0] - ref)) <= tol


def test_vide_generic_equals_compiled_costate():
    g = grid_make(1.0, 0.5, 32)
    u = ControlSignal.constant(g, [0.0])
    slow, fast = scalar_vide(-0.6, 0.4, c=1.0), scalar_vide(-0.6, 0.4, c=1.0, fast=True)
    y = solve_vide(fast, u, g)
    np.testing.assert_allclose(solve_adjoint_vide(slow, y, u, g).values,
                               solve_adjoint_vide(fast, y, u, g).values, rtol=1e-12, atol=1e-14)


# --- duality ------------------------------------------------------------------


def _duality(P, npd, T, h, us_fun, u_fun):
    g = grid_make(T, h, npd)
    us = ControlSignal(g, us_fun(g.t)[:, None])
    u = ControlSignal(g, u_fun(g.t)[:, None])
    ys = solve_fdde(P, us, g)
    Y = solve_variational(P, ys, us, u)
    psi = solve_adjoint_fdde(P, ys, us, g)
    return duality_gap(P, Y, psi, g, ys, us, u, relative=True), (P, Y, psi, g, ys, us, u)


def test_duality_gap_zero_without_increment():
    P = random_linear_fdde(np.random.default_rng(0))
    gap, _ = _duality(P, 64, 1.0, 0.25, lambda t: 0.2 * t, lambda t: 0.2 * t)
    assert gap == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_duality_gap_small_and_shrinking(seed):
    P = random_linear_fdde(np.random.default_rng(seed))
    gaps = [_duality(P, npd, 1.0, 0.25, lambda t: 0.3 * np.sin(5 * t), lambda t: 0.5 * np.cos(t))[0]
            for npd in (64, 128, 256)]
    assert gaps[2] <= 1e-2
    assert gaps[0] > gaps[1] > gaps[2]


def test_spike_duality_refines():
    P = example4_problem(64)
    spike = lambda t: (t < 0.25).astype(float)
    gaps = [_duality(P, npd, 2.0, 0.5, lambda t: 0.5 + 0 * t,
                     lambda t: 0.5 + 0.5 * spike(t))[0] for npd in (64, 128)]
    assert gaps[1] <= 0.9 * gaps[0]


def test_integration_by_parts():
    lhs, rhs = fractional_ibp_sides(lambda t: t ** 2, lambda t: t ** 3, 0.5, 1.0, 2048)
    assert abs(lhs - rhs) / abs(lhs) <= 1e-2
    # D^a t^3 = Gamma(4) / Gamma(3.5) t^2.5, so the left side is that constant over 5.5
    exact = math.gamma(4) / math.gamma(3.5) * (1 / 5.5)
    assert lhs == pytest.approx(exact, rel=1e-2)
