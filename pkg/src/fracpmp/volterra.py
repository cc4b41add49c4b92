"""Product-rectangle weights for the kernel ``(t-s)^(a-1)`` and the forward
solver for delayed Volterra equations with that kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import ControlSignal, Grid, Trajectory, VideProblem
from .errors import InvalidArgument, NumericalBlowup
from .kernels import march_linear

BLOWUP_GUARD = 1e12


@dataclass(frozen=True, eq=False)
class SingularWeights:
    """Weights ``w_{n,j}`` with ``int_0^{t_n} (t_n-s)^(a-1) phi(s) ds ~ sum_j w_{n,j} phi(t_j)``.

    On a uniform grid the table is Toeplitz, ``w_{n,j} = coef[n-j]``, so only
    the vector ``coef`` (with ``coef[0] = 0``) is stored.
    """

    grid: Grid
    alpha: float
    coef: np.ndarray

    def row(self, n: int) -> np.ndarray:
        """Weights ``w_{n,0..n-1}``."""
        return self.coef[n:0:-1].copy()

    def dense(self) -> np.ndarray:
        N1 = self.grid.N + 1
        idx = np.arange(N1)
        lag = idx[:, None] - idx[None, :]
        W = np.where(lag > 0, self.coef[np.clip(lag, 0, None)], 0.0)
        return W


@lru_cache(maxsize=64)
def _weights_cached(grid: Grid, alpha: float) -> SingularWeights:
    lags = np.arange(1, grid.N + 1, dtype=float)
    # l^a - (l-1)^a without cancellation for large l
    with np.errstate(divide="ignore"):
        diff = -(lags ** alpha) * np.expm1(alpha * np.log1p(-1.0 / lags))
    coef = np.zeros(grid.N + 1)
    coef[1:] = grid.dt ** alpha / alpha * diff
    coef.setflags(write=False)
    return SingularWeights(grid, float(alpha), coef)


def singular_weights(grid: Grid, alpha: float) -> SingularWeights:
    if not 0 < alpha <= 1:
        raise InvalidArgument("alpha must lie in (0, 1]")
    return _weights_cached(grid, float(alpha))


@lru_cache(maxsize=64)
def _trap_cached(grid: Grid, alpha: float):
    N = grid.N
    c = grid.dt ** alpha / (alpha * (alpha + 1))
    a1 = alpha + 1
    l = np.arange(N + 2, dtype=float)
    mid = np.zeros(N + 1)
    mid[1:] = l[2:] ** a1 - 2 * l[1:-1] ** a1 + l[:-2] ** a1
    k = np.arange(N + 1, dtype=float)
    first = np.zeros(N + 1)
    first[1:] = (k[1:] - 1) ** a1 - (k[1:] - 1 - alpha) * k[1:] ** alpha
    mid *= c
    first *= c
    mid.setflags(write=False)
    first.setflags(write=False)
    return mid, first, c


def trapezoid_weights(grid: Grid, alpha: float):
    """Product-trapezoid weights: the kernel integrated exactly against the
    piecewise-linear interpolant of the integrand.

    Returns ``(mid, first, last)`` so that the integral up to ``t_n`` is
    ``first[n] phi_0 + sum_{0<j<n} mid[n-j] phi_j + last phi_n``.
    """
    if not 0 < alpha <= 1:
        raise InvalidArgument("alpha must lie in (0, 1]")
    return _trap_cached(grid, float(alpha))


def linear_march(coef, A, Ad, r, m, base, hist=None):
    """Run the compiled march ``y_k = base_k + sum_{j<k} coef[k-j] F_j`` with
    ``F_j = A_j y_j + Ad_j y_{j-m} + r_j``.

    ``A`` and ``Ad`` may be single matrices or per-node stacks.
    """
    r = np.ascontiguousarray(r, dtype=float)
    N1, n = r.shape
    A = np.broadcast_to(np.asarray(A, dtype=float), (N1, n, n))
    Ad = np.broadcast_to(np.asarray(Ad, dtype=float), (N1, n, n))
    base = np.broadcast_to(np.asarray(base, dtype=float), (N1, n))
    if hist is None:
        hist = np.zeros((m + 1, n))
    hist = np.asarray(hist, dtype=float)
    coef = np.ascontiguousarray(coef, dtype=float)
    y, bad = march_linear(coef, A, Ad, r, int(m), base, hist, BLOWUP_GUARD)
    if bad >= 0:
        raise NumericalBlowup(bad, float(np.max(np.abs(y[bad]))))
    return np.asarray(y)


def _check_value(k, v):
    if not np.all(np.abs(v) <= BLOWUP_GUARD):
        raise NumericalBlowup(k, float(np.max(np.abs(v))))


def _setup(problem, u: ControlSignal, grid: Grid):
    if u.grid != grid:
        raise InvalidArgument("control lives on a different grid")
    if abs(grid.h - problem.h) > 1e-12 * problem.h or abs(grid.T - problem.T) > 1e-12 * problem.T:
        raise InvalidArgument("grid does not match the problem's T and h")
    for j in range(grid.N + 1):
        if not problem.U.contains(u.values[j]):
            raise InvalidArgument(f"control inadmissible at node {j}")


def solve_vide(problem: VideProblem, u: ControlSignal, grid: Grid,
               refine: bool = False) -> Trajectory:
    """March ``y_n = eta(t_n) + sum_{j<n} w_{n,j} f(t_n, t_j, y_j, y_{j-m}, u_j)``.

    With ``refine=True`` the rectangle solution seeds two forward sweeps with
    product-trapezoid weights. Each sweep takes the already refined values
    for ``j < n`` and the previous sweep's value on the diagonal ``j = n``.
    """
    _setup(problem, u, grid)
    N, m, n = grid.N, grid.m, problem.n
    w = singular_weights(grid, problem.alpha).coef
    t = grid.t
    eta = problem.Eta(t)
    U = u.values

    if problem.linear is not None:
        lin = problem.linear
        y = linear_march(w, lin.A, lin.Ad, U @ lin.B.T, m, eta)
    else:
        y = np.zeros((N + 1, n))
        y[0] = eta[0]
        for k in range(1, N + 1):
            yd = _delayed_prefix(y, k, m)
            F = problem.F(t[k], t[:k], y[:k], yd, U[:k])
            y[k] = eta[k] + w[k:0:-1] @ F
            _check_value(k, y[k])

    if refine:
        mid, first, last = trapezoid_weights(grid, problem.alpha)
        for _ in range(2):
            for k in range(1, N + 1):
                yd = _delayed_prefix(y, k + 1, m)
                F = problem.F(t[k], t[: k + 1], y[: k + 1], yd, U[: k + 1])
                v = eta[k] + first[k] * F[0] + last * F[k]
                if k > 1:
                    v = v + mid[k - 1:0:-1] @ F[1:k]
                y[k] = v
                _check_value(k, y[k])
    return Trajectory(grid, y)


def _delayed_prefix(y, k, m):
    """``y_{j-m}`` for ``j < k`` under the zero history."""
    out = np.zeros((k, y.shape[1]))
    if k > m:
        out[m:k] = y[: k - m]
    return out
