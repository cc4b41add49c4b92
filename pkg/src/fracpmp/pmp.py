"""Hamiltonians, pointwise maximization, the maximum-principle residual and a
forward-backward sweep built on top of them.

Hamiltonian evaluation is batched: internally a Hamiltonian is a function of
a candidate array of shape ``(k, c, m)`` (``c`` candidates at each of ``k``
nodes) returning ``(k, c)``. The scalar entry points wrap that form.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .adjoint import AdjointSourceConvention, solve_adjoint_fdde, solve_adjoint_vide
from .core import (AdjointTrajectory, Box, ControlSet, ControlSignal,
                   FddeProblem, Finite, Trajectory, VideProblem)
from .errors import InadmissibleDirection, InvalidArgument, NotConverged
from .fdde import FddeSolverOptions, solve_fdde
from .volterra import singular_weights, solve_vide

_GOLD = (np.sqrt(5.0) - 1.0) / 2.0
FD_STEP = 1e-5


class Kind(enum.Enum):
    FDDE = "fdde"
    VIDE = "vide"


def _kind(problem, kind=None) -> Kind:
    if kind is not None:
        return Kind(kind) if not isinstance(kind, Kind) else kind
    return Kind.VIDE if isinstance(problem, VideProblem) else Kind.FDDE


@dataclass(frozen=True)
class SweepParams:
    beta: float = 0.5
    tol: float = 1e-6
    max_iter: int = 500
    grid_points: int = 33
    refine_tol: float = 1e-8
    convention: AdjointSourceConvention = AdjointSourceConvention.SHIFTED_INDICATOR

    def __post_init__(self):
        if not 0 < self.beta <= 1:
            raise InvalidArgument("beta must lie in (0, 1]")
        if not self.tol > 0:
            raise InvalidArgument("tol must be positive")
        if self.max_iter < 1:
            raise InvalidArgument("max_iter must be >= 1")
        if self.grid_points < 2:
            raise InvalidArgument("grid_points must be >= 2")


@dataclass(frozen=True, eq=False)
class PmpReport:
    residuals: np.ndarray
    max_residual: float
    l1_residual: float
    objective: float


class SweepResult(NamedTuple):
    state: Trajectory
    control: ControlSignal
    adjoint: AdjointTrajectory
    report: PmpReport
    iterations: int


def _trapz(v, dt):
    v = np.asarray(v, dtype=float)
    return float(dt * (v.sum() - 0.5 * (v[0] + v[-1])))


def objective(problem, y: Trajectory, u: ControlSignal) -> float:
    """Running cost ``int_0^T g(t, y, y(t-h), u) dt`` by the trapezoid rule."""
    if y.grid != u.grid:
        raise InvalidArgument("y and u live on different grids")
    g = y.grid
    return _trapz(problem.G(g.t, y.values, y.delayed(), u.values), g.dt)


# --- batched Hamiltonians ----------------------------------------------------


def _flat_cost(problem, t, Y, Yd, idx, cands):
    k, c, m = cands.shape
    rep = lambda a: np.repeat(a[idx], c, axis=0)
    return rep(t), rep(Y), rep(Yd), cands.reshape(k * c, m)


def fdde_hamiltonian_batch(problem: FddeProblem, psi: AdjointTrajectory,
                           y: Trajectory, idx=None) -> Callable:
    """Batched ``psi^T f - g`` at the nodes ``idx`` (all nodes by default)."""
    g = y.grid
    idx = np.arange(g.N + 1) if idx is None else np.asarray(idx)
    t, Y, Yd, P = g.t, y.values, y.delayed(), psi.values

    def H(cands):
        cands = np.asarray(cands, dtype=float)
        k, c, _ = cands.shape
        args = _flat_cost(problem, t, Y, Yd, idx, cands)
        F = problem.F(*args).reshape(k, c, -1)
        G = problem.G(*args).reshape(k, c)
        return np.einsum("kcn,kn->kc", F, P[idx]) - G

    return H


def vide_hamiltonian_batch(problem: VideProblem, psi: AdjointTrajectory,
                           y: Trajectory, idx=None) -> Callable:
    """Batched ``int_s^T (t-s)^(a-1) psi(t)^T f(t, s, .) dt - g`` at ``idx``.

    The integral uses the product weights read from the right, matching the
    backward costate march.
    """
    g = y.grid
    N = g.N
    idx = np.arange(N + 1) if idx is None else np.asarray(idx)
    t, Y, Yd, P = g.t, y.values, y.delayed(), psi.values
    w = singular_weights(g, problem.alpha).coef

    if problem.linear is not None:
        # f does not depend on t: pull the weighted costate sum out
        Phi = np.zeros_like(P)
        for j in range(N):
            Phi[j] = w[1: N - j + 1] @ P[j + 1:]
        lin = problem.linear

    def H(cands):
        cands = np.asarray(cands, dtype=float)
        k, c, m = cands.shape
        G = problem.G(*_flat_cost(problem, t, Y, Yd, idx, cands)).reshape(k, c)
        if problem.linear is not None:
            drift = Y[idx] @ lin.A.T + Yd[idx] @ lin.Ad.T
            F = drift[:, None, :] + cands @ lin.B.T
            return np.einsum("kcn,kn->kc", F, Phi[idx]) - G
        out = np.empty((k, c))
        for r, j in enumerate(idx):
            if j == N:
                out[r] = 0.0
                continue
            ks = np.arange(j + 1, N + 1)
            nk = ks.size
            F = problem.F(np.repeat(t[ks], c), np.full(nk * c, t[j]),
                          np.repeat(Y[j][None], nk * c, axis=0),
                          np.repeat(Yd[j][None], nk * c, axis=0),
                          np.tile(cands[r], (nk, 1))).reshape(nk, c, -1)
            out[r] = np.einsum("k,kcn,kn->c", w[ks - j], F, P[ks])
        return out - G

    return H


def _batch(kind, problem, psi, y, idx=None):
    if kind is Kind.VIDE:
        return vide_hamiltonian_batch(problem, psi, y, idx)
    return fdde_hamiltonian_batch(problem, psi, y, idx)


def hamiltonian_fdde(psi: AdjointTrajectory, problem: FddeProblem,
                     y_star: Trajectory, t: float, u) -> float:
    j = y_star.grid.node_index(t)
    H = fdde_hamiltonian_batch(problem, psi, y_star, [j])
    return float(H(np.atleast_1d(np.asarray(u, float))[None, None, :])[0, 0])


def hamiltonian_vide(psi: AdjointTrajectory, problem: VideProblem,
                     y_star: Trajectory, s: float, u, grid=None) -> float:
    if grid is not None and grid != y_star.grid:
        raise InvalidArgument("grid does not match the state")
    j = y_star.grid.node_index(s)
    H = vide_hamiltonian_batch(problem, psi, y_star, [j])
    return float(H(np.atleast_1d(np.asarray(u, float))[None, None, :])[0, 0])


# --- maximization ------------------------------------------------------------


def _box_grid(U: Box, points: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, points) if hi > lo else np.array([lo])
            for lo, hi in zip(U.lo, U.hi)]
    return np.array(list(itertools.product(*axes)), dtype=float)


def maximize_batch(H: Callable, U: ControlSet, k: int, points: int = 33,
                   refine_tol: float = 1e-8) -> np.ndarray:
    """Maximize a batched Hamiltonian at ``k`` nodes at once; returns ``(k, m)``.

    Finite sets are searched exhaustively. Boxes get a coarse lexicographic
    scan followed by golden-section refinement of one coordinate at a time;
    a refined point replaces the scan winner only if strictly better, so
    ties resolve to the lexicographically smallest scanned point.
    """
    if isinstance(U, Finite):
        P = U.points
        vals = H(np.broadcast_to(P, (k,) + P.shape).copy())
        return P[np.argmax(vals, axis=1)].copy()

    P = _box_grid(U, points)
    vals = H(np.broadcast_to(P, (k,) + P.shape).copy())
    best = np.argmax(vals, axis=1)
    x = P[best].copy()
    fx = vals[np.arange(k), best]
    for d in range(U.dim):
        lo, hi = U.lo[d], U.hi[d]
        if hi <= lo:
            continue
        step = (hi - lo) / (points - 1)
        a = np.maximum(x[:, d] - step, lo)
        b = np.minimum(x[:, d] + step, hi)

        def at(v):
            c = x.copy()
            c[:, d] = v
            return H(c[:, None, :])[:, 0]

        x1 = b - _GOLD * (b - a)
        x2 = a + _GOLD * (b - a)
        f1, f2 = at(x1), at(x2)
        while np.max(b - a) > refine_tol:
            left = f1 >= f2  # keep [a, x2]; ties lean towards smaller u
            na = np.where(left, a, x1)
            nb = np.where(left, x2, b)
            nx1 = np.where(left, nb - _GOLD * (nb - na), x2)
            nx2 = np.where(left, x1, na + _GOLD * (nb - na))
            fn = at(np.where(left, nx1, nx2))
            f1, f2 = np.where(left, fn, f2), np.where(left, f1, fn)
            a, b, x1, x2 = na, nb, nx1, nx2
        cand = 0.5 * (a + b)
        fc = at(cand)
        better = fc > fx
        x[better, d] = cand[better]
        fx = np.where(better, fc, fx)
    return x


def maximize_hamiltonian(H: Callable, U: ControlSet, points: int = 33,
                         refine_tol: float = 1e-8) -> np.ndarray:
    """Maximize a scalar ``H(u)`` over ``U``."""
    def Hb(cands):
        return np.array([[float(H(c)) for c in row] for row in cands])
    return maximize_batch(Hb, U, 1, points, refine_tol)[0]


def _with_incumbent(H, U, u_star, points, refine_tol):
    """Argmax at every node plus ``H`` at the argmax and at the incumbent.

    The incumbent is kept whenever it is at least as good, so the returned
    maximizer never scores below it.
    """
    k = u_star.shape[0]
    uhat = maximize_batch(H, U, k, points, refine_tol)
    vals = H(np.stack([uhat, u_star], axis=1))
    keep = vals[:, 1] >= vals[:, 0]
    uhat[keep] = u_star[keep]
    return uhat, np.maximum(vals[:, 0], vals[:, 1]), vals[:, 1]


def pmp_residual(kind, problem, y_star: Trajectory, u_star: ControlSignal,
                 psi: AdjointTrajectory, U: Optional[ControlSet] = None,
                 points: int = 33, refine_tol: float = 1e-8) -> PmpReport:
    """Per-node gap ``max_u Psi(t_j, u) - Psi(t_j, u*_j)`` and its aggregates.

    The incumbent ``u*_j`` is always among the candidates, so every entry is
    nonnegative.
    """
    kind = _kind(problem, kind)
    U = problem.U if U is None else U
    if not (y_star.grid == u_star.grid == psi.grid):
        raise InvalidArgument("inputs live on different grids")
    H = _batch(kind, problem, psi, y_star)
    _, best, cur = _with_incumbent(H, U, np.array(u_star.values), points, refine_tol)
    r = best - cur
    g = y_star.grid
    return PmpReport(residuals=r, max_residual=float(np.max(r)),
                     l1_residual=_trapz(r, g.dt),
                     objective=objective(problem, y_star, u_star))


def _forward(kind, problem, u: ControlSignal):
    if kind is Kind.VIDE:
        return solve_vide(problem, u, u.grid)
    return solve_fdde(problem, u, u.grid, FddeSolverOptions())


def _backward(kind, problem, y, u, conv):
    if kind is Kind.VIDE:
        return solve_adjoint_vide(problem, y, u, u.grid, conv)
    return solve_adjoint_fdde(problem, y, u, u.grid, conv)


def forward_backward_sweep(problem, kind=None, u0: ControlSignal = None,
                           params: Optional[SweepParams] = None) -> SweepResult:
    """Relaxed fixed-point iteration on state, costate and pointwise argmax.

    Raises :class:`NotConverged` with the last iterate once ``max_iter``
    sweeps pass without the control settling to ``tol``.
    """
    if u0 is None:
        raise InvalidArgument("an initial control is required")
    kind = _kind(problem, kind)
    params = params or SweepParams()
    U = problem.U
    grid = u0.grid
    u = np.array(u0.values, dtype=float)
    for j in range(grid.N + 1):
        if not U.contains(u[j]):
            raise InvalidArgument(f"initial control inadmissible at node {j}")
    history: List[float] = []
    converged = False
    y = psi = None
    for it in range(1, params.max_iter + 1):
        sig = ControlSignal(grid, u)
        y = _forward(kind, problem, sig)
        psi = _backward(kind, problem, y, sig, params.convention)
        H = _batch(kind, problem, psi, y)
        uhat, _, _ = _with_incumbent(H, U, u, params.grid_points, params.refine_tol)
        if isinstance(U, Finite):
            new = uhat
        else:
            new = U.project((1.0 - params.beta) * u + params.beta * uhat)
        change = float(np.max(np.linalg.norm(new - u, axis=1)))
        history.append(change)
        u = new
        if change <= params.tol:
            converged = True
            break
    if not converged:
        raise NotConverged(
            f"sweep did not settle within {params.max_iter} iterations "
            f"(last change {history[-1]:.3e})",
            state=y, control=ControlSignal(grid, u), adjoint=psi, history=history)
    sig = ControlSignal(grid, u, U)
    y = _forward(kind, problem, sig)
    psi = _backward(kind, problem, y, sig, params.convention)
    report = pmp_residual(kind, problem, y, sig, psi, U,
                          params.grid_points, params.refine_tol)
    return SweepResult(y, sig, psi, report, it)


def hamiltonian_control_gradient(kind, problem, psi, y, u: np.ndarray,
                                 step: float = FD_STEP) -> np.ndarray:
    """Central-difference ``d Psi / d u`` at every node, shape ``(N+1, m)``."""
    H = _batch(kind, problem, psi, y)
    k, m = u.shape
    cands = np.empty((k, 2 * m, m))
    for d in range(m):
        e = np.zeros(m)
        e[d] = step
        cands[:, 2 * d] = u + e
        cands[:, 2 * d + 1] = u - e
    vals = H(cands)
    return (vals[:, 0::2] - vals[:, 1::2]) / (2 * step)


def gateaux_check(problem, u: ControlSignal, du, eps: float = 1e-4, kind=None,
                  conv=AdjointSourceConvention.SHIFTED_INDICATOR):
    """Compare the costate directional derivative of ``J`` with finite differences.

    Returns ``(adjoint_estimate, fd_estimate, relative_error)``.
    """
    kind = _kind(problem, kind)
    if not isinstance(problem.U, Box):
        raise InvalidArgument("gateaux_check needs a Box control set")
    grid = u.grid
    base = np.array(u.values, dtype=float)
    du = np.asarray(du, dtype=float).reshape(base.shape)
    plus, minus = base + eps * du, base - eps * du
    for v in (plus, minus):
        if not all(problem.U.contains(row) for row in v):
            raise InadmissibleDirection("u +/- eps*du leaves the control set")

    y = _forward(kind, problem, u)
    psi = _backward(kind, problem, y, u, conv)
    dpsi = hamiltonian_control_gradient(kind, problem, psi, y, base)
    adj = -_trapz(np.sum(dpsi * du, axis=1), grid.dt)

    def J(v):
        s = ControlSignal(grid, v)
        return objective(problem, _forward(kind, problem, s), s)

    fd = (J(plus) - J(minus)) / (2 * eps)
    scale = max(abs(adj), abs(fd))
    rel = abs(adj - fd) / scale if scale > 0 else 0.0
    return adj, fd, rel
