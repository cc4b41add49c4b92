"""Costate solvers and the duality diagnostics that tie them to the state.

The delay-system adjoint carries a right-sided Caputo derivative and an
advanced argument ``psi(t + h)``. Reversing time, ``phi(tau) = psi(T - tau)``,
turns it into an ordinary left-Caputo system with delay ``h`` and zero
history, which the forward solver already handles. The Volterra adjoint is
marched backwards directly.
"""

from __future__ import annotations

import enum
import math
from typing import Callable, Tuple

import numpy as np

from .core import (AdjointTrajectory, ControlSignal, FddeProblem, Grid,
                   Trajectory, VideProblem)
from .errors import InvalidArgument
from .fdde import (caputo_l1_derivative, control_increment, jacobians,
                   solve_linear_fdde)
from .volterra import _check_value, linear_march, singular_weights


class AdjointSourceConvention(enum.Enum):
    """Where the delayed-cost gradient enters the costate equation.

    ``SHIFTED_INDICATOR`` uses ``-g_yh(t + h, y(t + h), y(t), u(t + h))`` on
    ``(0, T - h)`` and nothing after; this is the form produced by the
    duality argument. ``AS_DISPLAYED`` uses ``-g_yh(t, y(t), y(t - h), u(t))``
    at every ``t``.
    """

    SHIFTED_INDICATOR = "shifted"
    AS_DISPLAYED = "as_displayed"


def _check_inputs(y: Trajectory, u: ControlSignal, grid: Grid):
    if y.grid != grid or u.grid != grid:
        raise InvalidArgument("state, control and grid disagree")


def _sources(gy, gyh, m, conv):
    src = -np.array(gy, dtype=float)
    if conv is AdjointSourceConvention.SHIFTED_INDICATOR:
        src[: src.shape[0] - m] -= gyh[m:]
    else:
        src -= gyh
    return src


def adjoint_fdde_from_jacobians(alpha: float, grid: Grid, fy, fyh, gy, gyh,
                                conv=AdjointSourceConvention.SHIFTED_INDICATOR
                                ) -> AdjointTrajectory:
    """Costate from Jacobians sampled at the nodes.

    ``fy``/``fyh`` are ``(N+1, n, n)`` stacks and ``gy``/``gyh`` are
    ``(N+1, n)``; all are evaluated at ``(t_j, y_j, y_{j-m}, u_j)``. ``alpha``
    may equal 1, which gives the classical delayed adjoint ODE.
    """
    N, m = grid.N, grid.m
    fy = np.asarray(fy, dtype=float)
    fyh = np.asarray(fyh, dtype=float)
    n = fy.shape[-1]
    src = _sources(gy, gyh, m, conv)
    # node j of psi sees f_yh(t_j + h)^T psi(t_j + h)
    adv = np.zeros_like(fyh)
    adv[: N + 1 - m] = fyh[m:]
    A_rev = np.ascontiguousarray(np.swapaxes(fy, 1, 2)[::-1])
    Ad_rev = np.ascontiguousarray(np.swapaxes(adv, 1, 2)[::-1])
    if alpha == 1.0:
        coef = np.full(N + 1, grid.dt)
        coef[0] = 0.0
        phi = linear_march(coef, A_rev, Ad_rev, src[::-1], m, np.zeros(n))
    else:
        phi = solve_linear_fdde(alpha, grid, A_rev, Ad_rev, src[::-1]).values
    return AdjointTrajectory(grid, phi[::-1])


def solve_adjoint_fdde(problem: FddeProblem, y_star: Trajectory,
                       u_star: ControlSignal, grid: Grid,
                       conv=AdjointSourceConvention.SHIFTED_INDICATOR
                       ) -> AdjointTrajectory:
    """Costate of the delay system along ``(y*, u*)``."""
    _check_inputs(y_star, u_star, grid)
    fy, fyh, gy, gyh = jacobians(problem, y_star, u_star)
    return adjoint_fdde_from_jacobians(problem.alpha, grid, fy, fyh, gy, gyh, conv)


def solve_adjoint_vide(problem: VideProblem, y_star: Trajectory,
                       u_star: ControlSignal, grid: Grid,
                       conv=AdjointSourceConvention.SHIFTED_INDICATOR
                       ) -> AdjointTrajectory:
    """Backward march of the Volterra costate

        psi(s) = src(s) + int_s^T (t-s)^(a-1) f_y(t, s, .)^T psi(t) dt
                 + int_{s+h}^T (t-h-s)^(a-1) f_yh(t, s+h, .)^T psi(t) dt.

    Each node only needs costate values strictly to its right, so the step
    is explicit. ``values[N]`` is the left limit at ``T``.
    """
    _check_inputs(y_star, u_star, grid)
    N, m, n = grid.N, grid.m, problem.n
    t = grid.t
    Y = y_star.values
    Yd = y_star.delayed()
    U = u_star.values
    c = singular_weights(grid, problem.alpha).coef
    gy = problem.Gy(t, Y, Yd, U)
    gyh = problem.Gyh(t, Y, Yd, U)
    src = _sources(gy, gyh, m, conv)

    if problem.linear is not None:
        lin = problem.linear
        # the reversed sums are lower Toeplitz, exactly the forward march
        phi = linear_march(c, lin.A.T, lin.Ad.T, np.zeros((N + 1, n)), m,
                           src[::-1])
        return AdjointTrajectory(grid, phi[::-1])

    psi = np.zeros((N + 1, n))
    for j in range(N, -1, -1):
        acc = src[j].copy()
        if j < N:
            k = np.arange(j + 1, N + 1)
            rep = lambda a: np.repeat(a[None], k.size, axis=0)
            J = problem.Fy(t[k], np.full(k.size, t[j]), rep(Y[j]), rep(Yd[j]), rep(U[j]))
            acc += np.einsum("k,kji,kj->i", c[k - j], J, psi[k])
        if j + m < N:
            k = np.arange(j + m + 1, N + 1)
            i = j + m
            rep = lambda a: np.repeat(a[None], k.size, axis=0)
            J = problem.Fyh(t[k], np.full(k.size, t[i]), rep(Y[i]), rep(Y[j]), rep(U[i]))
            acc += np.einsum("k,kji,kj->i", c[k - i], J, psi[k])
        _check_value(j, acc)
        psi[j] = acc
    return AdjointTrajectory(grid, psi)


def _trapz(v, dt):
    v = np.asarray(v, dtype=float)
    return float(dt * (v.sum(axis=0) - 0.5 * (v[0] + v[-1])))


def duality_terms(problem: FddeProblem, Y: Trajectory, psi: AdjointTrajectory,
                  grid: Grid, y_star: Trajectory, u_star: ControlSignal,
                  u: ControlSignal) -> Tuple[float, float]:
    """Both sides of the duality identity, by the trapezoid rule.

    Returns ``(cost_side, costate_side)`` with
    ``cost_side = int g_y Y + g_yh Y(t-h)`` and
    ``costate_side = int psi^T (f(., u) - f(., u*))``. For exact solutions
    ``cost_side = -costate_side``.
    """
    for obj in (Y, psi, y_star, u_star, u):
        if obj.grid != grid:
            raise InvalidArgument("inputs live on different grids")
    _, _, gy, gyh = jacobians(problem, y_star, u_star)
    fhat = control_increment(problem, y_star, u_star, u)
    lhs = _trapz(np.sum(gy * Y.values + gyh * Y.delayed(), axis=1), grid.dt)
    rhs = _trapz(np.sum(psi.values * fhat, axis=1), grid.dt)
    return lhs, rhs


def duality_gap(problem: FddeProblem, Y: Trajectory, psi: AdjointTrajectory,
                grid: Grid, y_star: Trajectory, u_star: ControlSignal,
                u: ControlSignal, relative: bool = False) -> float:
    """Residual ``|int (g_y Y + g_yh Y(t-h)) + int psi^T fhat|``.

    ``Y`` is the first variation in the direction ``u - u*``. With
    ``relative=True`` the gap is divided by the larger of the two sides.
    """
    lhs, rhs = duality_terms(problem, Y, psi, grid, y_star, u_star, u)
    gap = abs(lhs + rhs)
    if not relative:
        return gap
    scale = max(abs(lhs), abs(rhs))
    return gap / scale if scale > 0 else 0.0


def fractional_ibp_sides(f: Callable, g: Callable, alpha: float, T: float,
                         N: int) -> Tuple[float, float]:
    """Discrete sides of ``int_0^T f D_{0+} g = int_0^T g D_{T-} f``.

    Both derivatives are of Riemann-Liouville type. ``g`` must vanish at 0
    so its left derivative equals the Caputo one (computed by L1); the right
    derivative of ``f`` is its right Caputo derivative plus the boundary term
    ``f(T) (T-t)^(-a) / Gamma(1-a)``.
    """
    if not 0 < alpha < 1:
        raise InvalidArgument("alpha must lie in (0, 1)")
    grid = Grid(T=float(T), h=float(T), dt=T / N, N=int(N), m=int(N))
    t = grid.t
    fv = np.asarray(f(t), dtype=float)
    gv = np.asarray(g(t), dtype=float)
    if abs(gv[0]) > 1e-12:
        raise InvalidArgument("g must vanish at t = 0")

    dg = np.zeros(N + 1)
    dg[1:] = caputo_l1_derivative(Trajectory(grid, gv), alpha)[:, 0]
    lhs = _trapz(fv * dg, grid.dt)

    rev = np.zeros(N + 1)
    rev[1:] = caputo_l1_derivative(Trajectory(grid, fv[::-1]), alpha)[:, 0]
    dfc = rev[::-1]
    rhs = _trapz(gv * dfc, grid.dt)
    # int_0^T g(t) (T-t)^(-a) dt with product weights of order 1-a
    w = singular_weights(grid, 1.0 - alpha).coef
    boundary = fv[-1] / math.gamma(1.0 - alpha) * float(w[N:0:-1] @ gv[:N])
    return lhs, rhs + boundary
