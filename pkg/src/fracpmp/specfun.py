"""Delayed fractional power series used as closed-form oracles.

All sums run over ascending ``k`` and stop at the last ``k`` with
``t - k*h > 0``; later terms are exactly zero because ``(t - k h)_+`` vanishes.
"""

from __future__ import annotations

import math

import numpy as np

from .core import ControlSignal, Grid, Trajectory
from .errors import InvalidArgument, SingularPoint
from .kernels import lower_toeplitz_apply


def gamma_fn(x: float) -> float:
    if not x > 0:
        raise InvalidArgument(f"gamma_fn needs x > 0, got {x}")
    return math.gamma(x)


def _check(alpha, h, alpha_max=1.0):
    if not 0 < alpha <= alpha_max:
        raise InvalidArgument("alpha must lie in (0, 1]")
    if not h > 0:
        raise InvalidArgument("delay must be positive")


def _kmax(t_max, h):
    # largest k with t_max - k h > 0
    if t_max <= 0:
        return -1
    return int(math.ceil(t_max / h)) - 1


def _pos_power(x, p):
    """``x_+ ** p`` with the convention that nonpositive ``x`` gives 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    mask = x > 0
    out[mask] = x[mask] ** p
    return out


def delayed_power_series(A, W, alpha: float, h: float, t):
    """``sum_k A^k (t - k h)_+^{a(k+1)} / Gamma(a(k+1)+1) W``.

    This is the solution of ``D^a x = A x(t-h) + W`` with zero history.
    ``t`` may be a scalar or an array; the result has shape ``t.shape + (n,)``.
    """
    _check(alpha, h)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    W = np.atleast_1d(np.asarray(W, dtype=float))
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + W.shape)
    term_vec = W.copy()  # A^k W
    for k in range(_kmax(float(np.max(t, initial=0.0)), h) + 1):
        p = alpha * (k + 1)
        coeff = _pos_power(t - k * h, p) / math.gamma(p + 1)
        out = out + coeff[..., None] * term_vec
        term_vec = A @ term_vec
    return out


def x_alpha_pure_delay_series(B, alpha: float, h: float, t: float) -> np.ndarray:
    """Pure-delay fundamental matrix ``sum_k B^k (t - k h)_+^{a k} / Gamma(a k + 1)``.

    Solves ``D^a X = B X(t-h)`` with ``X(0) = I`` and ``X = 0`` before 0.
    """
    _check(alpha, h)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if t < 0:
        raise InvalidArgument("t must be nonnegative")
    out = np.eye(B.shape[0])
    Bk = np.eye(B.shape[0])
    for k in range(1, _kmax(t, h) + 1):
        Bk = Bk @ B
        out = out + Bk * float(_pos_power(t - k * h, alpha * k)) / math.gamma(alpha * k + 1)
    return out


def delay_control_kernel(A, alpha: float, h: float, tau: float) -> np.ndarray:
    """Control-response kernel ``G(tau) = sum_k A^k (tau-kh)_+^{a(k+1)-1} / Gamma(a(k+1))``.

    ``int_0^t G(t-s) C u(s) ds`` is the forced response of
    ``D^a x = A x(t-h) + C u``. ``G`` blows up like ``tau^(a-1)`` at 0, so it
    is never sampled there.
    """
    _check(alpha, h)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if tau == 0:
        raise SingularPoint("G(tau) is unbounded at tau = 0")
    if tau < 0:
        raise InvalidArgument("tau must be positive")
    out = np.zeros_like(A)
    Ak = np.eye(A.shape[0])
    for k in range(_kmax(tau, h) + 1):
        p = alpha * (k + 1)
        out = out + Ak * (tau - k * h) ** (p - 1) / math.gamma(p)
        Ak = Ak @ A
    return out


def kernel_increments(A, alpha: float, h: float, grid: Grid) -> np.ndarray:
    """Exact cell integrals of ``G``: ``D[l] = int_{(l-1)dt}^{l dt} G(x) dx``.

    Returned with shape ``(N+1, n, n)`` and ``D[0] = 0``.
    """
    _check(alpha, h)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    lags = np.arange(grid.N + 1) * grid.dt
    D = np.zeros((grid.N + 1, n, n))
    Ak = np.eye(n)
    for k in range(_kmax(grid.T, h) + 1):
        p = alpha * (k + 1)
        P = _pos_power(lags - k * h, p) / math.gamma(p + 1)
        dP = np.diff(P, prepend=0.0)
        D += dP[:, None, None] * Ak
        Ak = Ak @ A
    return D


def linear_pure_delay_response(A, C, u: ControlSignal, alpha: float, h: float,
                               grid: Grid) -> Trajectory:
    """Forced response ``int_0^t G(t-s) C u(s) ds`` at every node.

    ``u`` is read as piecewise constant (``u_j`` on ``[t_j, t_{j+1})``), for
    which the product integration below is exact.
    """
    if u.grid != grid:
        raise InvalidArgument("control lives on a different grid")
    if abs(h - grid.h) > 1e-12 * h:
        raise InvalidArgument("delay does not match the grid")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.asarray(C, dtype=float).reshape(A.shape[0], -1)
    n = A.shape[0]
    forcing = u.values @ C.T  # (N+1, n)
    lags = np.arange(grid.N + 1) * grid.dt
    y = np.zeros((grid.N + 1, n))
    Ak = np.eye(n)
    for k in range(_kmax(grid.T, h) + 1):
        p = alpha * (k + 1)
        dP = np.diff(_pos_power(lags - k * h, p) / math.gamma(p + 1), prepend=0.0)
        y += lower_toeplitz_apply(dP, forcing) @ Ak.T
        Ak = Ak @ A
    return Trajectory(grid, y)
