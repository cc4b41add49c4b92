"""Forward solver for Caputo fractional delay systems.

The state equation is marched in its equivalent Volterra form

    y(t) = y(0) + 1/Gamma(a) int_0^t (t-s)^(a-1) f(s, y(s), y(s-h), u(s)) ds,

with the product-rectangle weights of :mod:`fracpmp.volterra`. Because the
grid step divides ``h``, ``y(t_j - h)`` is the already known value ``y_{j-m}``
and every step is explicit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ControlSignal, FddeProblem, Grid, Trajectory
from .errors import InvalidArgument
from .kernels import lower_toeplitz_apply
from .volterra import (_check_value, _setup, linear_march, singular_weights,
                       trapezoid_weights)


class Scheme(enum.Enum):
    PRODUCT_RECTANGLE = "product_rectangle"
    PREDICTOR_CORRECTOR = "predictor_corrector"


@dataclass(frozen=True)
class FddeSolverOptions:
    scheme: Scheme = Scheme.PRODUCT_RECTANGLE
    corrector_sweeps: int = 1

    def __post_init__(self):
        if self.corrector_sweeps < 0:
            raise InvalidArgument("corrector_sweeps must be >= 0")


def fractional_weights(grid: Grid, alpha: float) -> np.ndarray:
    """Rectangle weights already divided by ``Gamma(alpha)``."""
    return singular_weights(grid, alpha).coef / math.gamma(alpha)


def _trapezoid_weights(grid: Grid, alpha: float):
    mid, first, last = trapezoid_weights(grid, alpha)
    g = math.gamma(alpha)
    return mid / g, first / g, last / g


def solve_linear_fdde(alpha: float, grid: Grid, A, Ad, r, y0=None,
                      history=None) -> Trajectory:
    """Product-rectangle solve of ``D^a y = A_t y + Ad_t y(t-h) + r_t``.

    ``A``/``Ad`` are single matrices or per-node stacks, ``r`` is ``(N+1, n)``.
    This is the path used for variational and adjoint equations.
    """
    r = np.asarray(r, dtype=float)
    n = r.shape[1]
    if history is not None:
        history = np.asarray(history, dtype=float).reshape(grid.m + 1, n)
        y0 = history[-1]
    base = np.zeros(n) if y0 is None else np.asarray(y0, dtype=float)
    y = linear_march(fractional_weights(grid, alpha), A, Ad, r, grid.m,
                     base, history)
    return Trajectory(grid, y, history)


def solve_fdde(problem: FddeProblem, u: ControlSignal, grid: Grid,
               opts: Optional[FddeSolverOptions] = None,
               history=None) -> Trajectory:
    """Solve the state equation on ``grid`` for the control ``u``.

    ``history`` (optional, shape ``(m+1, n)``) replaces the zero initial
    function; its last row is ``y(0)``.
    """
    opts = opts or FddeSolverOptions()
    _setup(problem, u, grid)
    N, m, n = grid.N, grid.m, problem.n
    if history is not None:
        history = np.asarray(history, dtype=float).reshape(m + 1, n)
        y0 = history[-1].copy()
    else:
        y0 = np.zeros(n)
    U = u.values
    t = grid.t

    pc = (opts.scheme is Scheme.PREDICTOR_CORRECTOR and opts.corrector_sweeps > 0)
    if problem.linear is not None and not pc:
        lin = problem.linear
        return solve_linear_fdde(problem.alpha, grid, lin.A, lin.Ad,
                                 U @ lin.B.T, y0=y0, history=history)

    coef = fractional_weights(grid, problem.alpha)
    if pc:
        mid, first, last = _trapezoid_weights(grid, problem.alpha)
    y = np.zeros((N + 1, n))
    F = np.zeros((N + 1, n))
    y[0] = y0

    def rhs(k, yk):
        yd = y[k - m] if k >= m else (0.0 * yk if history is None else history[k])
        return problem.F(t[k:k + 1], yk[None, :], np.atleast_2d(yd), U[k:k + 1])[0]

    for k in range(N + 1):
        if k:
            y[k] = y0 + coef[k:0:-1] @ F[:k]
            _check_value(k, y[k])
            if pc:
                hist_sum = y0 + first[k] * F[0]
                if k > 1:
                    hist_sum = hist_sum + mid[k - 1:0:-1] @ F[1:k]
                for _ in range(opts.corrector_sweeps):
                    y[k] = hist_sum + last * rhs(k, y[k])
                    _check_value(k, y[k])
        F[k] = rhs(k, y[k])
    return Trajectory(grid, y, history)


def caputo_l1_derivative(traj: Trajectory, alpha: float) -> np.ndarray:
    """L1 approximation of the Caputo derivative at ``t_1..t_N``.

    Piecewise-linear interpolation of ``y`` with the kernel integrated exactly;
    returns an ``(N, n)`` array.
    """
    if not 0 < alpha < 1:
        raise InvalidArgument("alpha must lie in (0, 1)")
    g = traj.grid
    lags = np.arange(1, g.N + 1, dtype=float)
    b = 1.0 - alpha
    coef = np.zeros(g.N + 1)
    with np.errstate(divide="ignore"):
        coef[1:] = -(lags ** b) * np.expm1(b * np.log1p(-1.0 / lags))
    coef *= g.dt ** (-alpha) / math.gamma(2.0 - alpha)
    d = np.zeros_like(traj.values)
    d[:-1] = np.diff(traj.values, axis=0)
    return lower_toeplitz_apply(coef, d)[1:]


def fdde_residual(problem: FddeProblem, y: Trajectory, u: ControlSignal) -> float:
    """Max over interior nodes of ``|L1(y)(t_j) - f(t_j, y_j, y_{j-m}, u_j)|``."""
    g = y.grid
    if u.grid != g:
        raise InvalidArgument("y and u live on different grids")
    D = caputo_l1_derivative(y, problem.alpha)
    idx = np.arange(1, g.N)
    if idx.size == 0:
        return 0.0
    F = problem.F(g.t[idx], y.values[idx], y.delayed()[idx], u.values[idx])
    return float(np.max(np.abs(D[idx - 1] - F)))


def jacobians(problem: FddeProblem, y: Trajectory, u: ControlSignal):
    """``f_y, f_yh, g_y, g_yh`` sampled along ``(y, u)`` at every node."""
    t = y.grid.t
    yd = y.delayed()
    args = (t, y.values, yd, u.values)
    return (problem.Fy(*args), problem.Fyh(*args),
            problem.Gy(*args), problem.Gyh(*args))


def control_increment(problem, y: Trajectory, u_star: ControlSignal,
                      u: ControlSignal) -> np.ndarray:
    """``f(t, y*, y*_h, u) - f(t, y*, y*_h, u*)`` at every node."""
    t = y.grid.t
    yd = y.delayed()
    return (problem.F(t, y.values, yd, u.values)
            - problem.F(t, y.values, yd, u_star.values))


def solve_variational(problem: FddeProblem, y_star: Trajectory,
                      u_star: ControlSignal, u: ControlSignal) -> Trajectory:
    """First variation ``Y`` along ``(y*, u*)`` in the direction of ``u``:

        D^a Y = f_y Y + f_yh Y(t-h) + (f(., u) - f(., u*)),  Y = 0 on [-h, 0].
    """
    fy, fyh, _, _ = jacobians(problem, y_star, u_star)
    fhat = control_increment(problem, y_star, u_star, u)
    return solve_linear_fdde(problem.alpha, y_star.grid, fy, fyh, fhat)
