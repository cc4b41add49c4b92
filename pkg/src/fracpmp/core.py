"""Grids, trajectories, controls and problem definitions.

Every object here is immutable after construction: arrays are copied and
flagged read-only, so instances can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import InvalidArgument, NonAlignedHorizon, OutOfDomain

_ALIGN_RTOL = 1e-12


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform mesh ``t_j = j*dt`` on ``[0, T]`` whose step divides the delay.

    ``m`` is the delay measured in steps, so ``y(t_j - h)`` is node ``j - m``.
    """

    T: float
    h: float
    dt: float
    N: int
    m: int

    def __post_init__(self):
        if not (self.dt > 0 and self.m >= 1 and self.N >= self.m):
            raise InvalidArgument(f"degenerate grid {self}")
        if abs(self.m * self.dt - self.h) > _ALIGN_RTOL * self.h:
            raise NonAlignedHorizon("delay is not m*dt")
        if abs(self.N * self.dt - self.T) > _ALIGN_RTOL * self.T:
            raise NonAlignedHorizon("horizon is not N*dt")

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dt

    @property
    def history_t(self) -> np.ndarray:
        return (np.arange(self.m + 1) - self.m) * self.dt

    def node_index(self, t: float) -> int:
        """Index of the node at time ``t``; raises if ``t`` is off-grid."""
        j = int(round(t / self.dt))
        if j < 0 or j > self.N or abs(j * self.dt - t) > 1e-9 * max(self.dt, abs(t)):
            raise OutOfDomain(f"t={t} is not a grid node")
        return j


def grid_make(T: float, h: float, nodes_per_delay: int) -> Grid:
    if not (T > 0 and h > 0):
        raise InvalidArgument("T and h must be positive")
    if int(nodes_per_delay) != nodes_per_delay or nodes_per_delay < 1:
        raise InvalidArgument("nodes_per_delay must be a positive integer")
    m = int(nodes_per_delay)
    dt = h / m
    ratio = T / dt
    N = int(round(ratio))
    if abs(ratio - N) > _ALIGN_RTOL * ratio:
        raise NonAlignedHorizon(f"T/dt = {ratio!r} is not an integer")
    if N < m:
        raise InvalidArgument("horizon shorter than one delay")
    return Grid(T=float(T), h=float(h), dt=dt, N=N, m=m)


def _interp_rows(t_nodes, rows, t):
    # rows: (k, n) on increasing t_nodes
    return np.array([np.interp(t, t_nodes, rows[:, i]) for i in range(rows.shape[1])])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """State samples on a grid plus the history segment on ``[-h, 0]``.

    ``history=None`` is the standing zero initial function. A sampled history
    holds the ``m + 1`` values at ``-h, -h+dt, ..., 0``.
    """

    grid: Grid
    values: np.ndarray
    history: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.N + 1:
            raise InvalidArgument(
                f"expected {self.grid.N + 1} samples, got {v.shape[0]}")
        object.__setattr__(self, "values", _frozen(v))
        if self.history is not None:
            hist = np.asarray(self.history, dtype=float)
            if hist.ndim == 1:
                hist = hist[:, None]
            if hist.shape != (self.grid.m + 1, v.shape[1]):
                raise InvalidArgument("history must have shape (m+1, n)")
            object.__setattr__(self, "history", _frozen(hist))

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def eval(self, t: float) -> np.ndarray:
        g = self.grid
        if t < -g.h * (1 + 1e-14) or t > g.T * (1 + 1e-14):
            raise OutOfDomain(f"t={t} outside [-h, T]")
        if t < 0:
            if self.history is None:
                return np.zeros(self.n)
            return _interp_rows(g.history_t, self.history, t)
        return _interp_rows(g.t, self.values, t)

    def delayed(self) -> np.ndarray:
        """Samples of ``y(t_j - h)`` for every node ``j``."""
        g = self.grid
        out = np.empty_like(self.values)
        out[g.m:] = self.values[: g.N + 1 - g.m]
        if self.history is None:
            out[: g.m] = 0.0
        else:
            out[: g.m] = self.history[: g.m]
        return out


@dataclass(frozen=True, eq=False)
class AdjointTrajectory:
    """Costate samples on ``t_0..t_N``, identically zero on ``[T, T + h]``.

    ``values[N]`` stores the left limit at ``T``; for the Volterra adjoint
    this can be nonzero even though the tail is zero.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.N + 1:
            raise InvalidArgument("adjoint needs N+1 samples")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def eval(self, t: float) -> np.ndarray:
        g = self.grid
        if t < 0 or t > (g.T + g.h) * (1 + 1e-14):
            raise OutOfDomain(f"t={t} outside [0, T+h]")
        if t >= g.T:
            return np.zeros(self.n)
        return _interp_rows(g.t, self.values, t)

    def advanced(self) -> np.ndarray:
        """Samples of ``psi(t_j + h)`` (zero once ``t_j + h >= T``)."""
        g = self.grid
        out = np.zeros_like(self.values)
        out[: g.N - g.m] = self.values[g.m: g.N]
        return out


# --- admissible control sets -------------------------------------------------


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidArgument("lo and hi must be vectors of equal length")
        if np.any(lo > hi):
            raise InvalidArgument("Box requires lo <= hi componentwise")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @property
    def dim(self) -> int:
        return self.lo.size

    def project(self, v):
        return np.clip(np.asarray(v, dtype=float), self.lo, self.hi)

    def contains(self, v, tol=1e-12) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.all(v >= self.lo - tol) and np.all(v <= self.hi + tol))

    def __eq__(self, other):
        return (isinstance(other, Box) and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))


@dataclass(frozen=True, eq=False)
class Finite:
    """A finite control alphabet; points are kept in lexicographic order."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2 or p.shape[0] == 0:
            raise InvalidArgument("Finite needs at least one point")
        order = np.lexsort(p.T[::-1])
        p = p[order]
        if p.shape[0] > 1 and np.any(np.all(np.diff(p, axis=0) == 0, axis=1)):
            raise InvalidArgument("Finite control set has duplicate points")
        object.__setattr__(self, "points", _frozen(p))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def project(self, v):
        v = np.asarray(v, dtype=float)
        d = np.linalg.norm(self.points - v, axis=1)
        # argmin returns the first minimum, i.e. the lexicographically smallest
        return self.points[int(np.argmin(d))].copy()

    def contains(self, v, tol=1e-12) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.any(np.all(np.abs(self.points - v) <= tol, axis=1)))

    def __eq__(self, other):
        return isinstance(other, Finite) and np.array_equal(self.points, other.points)


ControlSet = Union[Box, Finite]


def control_project(U: ControlSet, v) -> np.ndarray:
    return U.project(v)


def rho(u, v) -> float:
    """Euclidean metric on the control space."""
    return float(np.linalg.norm(np.asarray(u, float) - np.asarray(v, float)))


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Per-node control values. If ``U`` is given, admissibility is checked."""

    grid: Grid
    values: np.ndarray
    U: Optional[ControlSet] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.N + 1:
            raise InvalidArgument("control needs N+1 samples")
        if self.U is not None:
            if v.shape[1] != self.U.dim:
                raise InvalidArgument("control dimension does not match U")
            bad = [j for j in range(v.shape[0]) if not self.U.contains(v[j])]
            if bad:
                raise InvalidArgument(f"control inadmissible at node {bad[0]}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @classmethod
    def constant(cls, grid: Grid, value, U: Optional[ControlSet] = None):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(grid, np.tile(value, (grid.N + 1, 1)), U)


# --- problem definitions -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearDynamics:
    """Marks ``f = A y + Ad y_h + B u`` with constant matrices.

    Solvers use it to route the march through the compiled kernel.
    """

    A: np.ndarray
    Ad: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        for name in ("A", "Ad", "B"):
            object.__setattr__(self, name, _frozen(np.atleast_2d(getattr(self, name))))


def _loop(fun, *args):
    return np.array([fun(*row) for row in zip(*args)], dtype=float)


@dataclass(frozen=True, eq=False)
class FddeProblem:
    """Caputo fractional delay system ``D^a y = f(t, y, y(t-h), u)`` with
    running cost ``g``.

    Callbacks take ``(t, y, yh, u)``. With ``vectorized=True`` they must accept
    a leading batch axis (``t`` of shape ``(k,)``, ``y`` of shape ``(k, n)``)
    and return ``(k, n)``, ``(k, n, n)`` or ``(k,)`` arrays; otherwise they are
    called once per sample.
    """

    alpha: float
    T: float
    h: float
    n: int
    f: Callable
    f_y: Callable
    f_yh: Callable
    g: Callable
    g_y: Callable
    g_yh: Callable
    U: ControlSet
    vectorized: bool = False
    linear: Optional[LinearDynamics] = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidArgument("alpha must lie in (0, 1)")
        if not (self.T > 0 and self.h > 0 and self.n >= 1):
            raise InvalidArgument("T, h, n must be positive")

    def _call(self, fun, shape, t, y, yh, u):
        t = np.asarray(t, dtype=float)
        if self.vectorized:
            out = np.asarray(fun(t, y, yh, u), dtype=float)
        else:
            out = _loop(fun, t, y, yh, u)
        return out.reshape((t.size,) + shape)

    def F(self, t, y, yh, u):
        return self._call(self.f, (self.n,), t, y, yh, u)

    def Fy(self, t, y, yh, u):
        return self._call(self.f_y, (self.n, self.n), t, y, yh, u)

    def Fyh(self, t, y, yh, u):
        return self._call(self.f_yh, (self.n, self.n), t, y, yh, u)

    def G(self, t, y, yh, u):
        return self._call(self.g, (), t, y, yh, u)

    def Gy(self, t, y, yh, u):
        return self._call(self.g_y, (self.n,), t, y, yh, u)

    def Gyh(self, t, y, yh, u):
        return self._call(self.g_yh, (self.n,), t, y, yh, u)


@dataclass(frozen=True, eq=False)
class VideProblem:
    """Delayed Volterra equation with weakly singular kernel

        y(t) = eta(t) + int_0^t (t-s)^(a-1) f(t, s, y(s), y(s-h), u(s)) ds.

    ``f``, ``f_y``, ``f_yh`` take ``(t, s, y, yh, u)``; the cost callbacks take
    ``(t, y, yh, u)`` as for :class:`FddeProblem`. ``eta(t)`` returns an
    ``n``-vector (or ``(k, n)`` when vectorized).
    """

    alpha: float
    T: float
    h: float
    n: int
    f: Callable
    f_y: Callable
    f_yh: Callable
    g: Callable
    g_y: Callable
    g_yh: Callable
    eta: Callable
    U: ControlSet
    vectorized: bool = False
    linear: Optional[LinearDynamics] = None

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidArgument("alpha must lie in (0, 1)")
        if not (self.T > 0 and self.h > 0 and self.n >= 1):
            raise InvalidArgument("T, h, n must be positive")

    def _call2(self, fun, shape, t, s, y, yh, u):
        s = np.asarray(s, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), s.shape)
        if self.vectorized:
            out = np.asarray(fun(t, s, y, yh, u), dtype=float)
        else:
            out = _loop(fun, t, s, y, yh, u)
        return out.reshape((s.size,) + shape)

    def F(self, t, s, y, yh, u):
        return self._call2(self.f, (self.n,), t, s, y, yh, u)

    def Fy(self, t, s, y, yh, u):
        return self._call2(self.f_y, (self.n, self.n), t, s, y, yh, u)

    def Fyh(self, t, s, y, yh, u):
        return self._call2(self.f_yh, (self.n, self.n), t, s, y, yh, u)

    _call = FddeProblem._call
    G = FddeProblem.G
    Gy = FddeProblem.Gy
    Gyh = FddeProblem.Gyh

    def Eta(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.vectorized:
            out = np.asarray(self.eta(t), dtype=float)
        else:
            out = np.array([self.eta(ti) for ti in t], dtype=float)
        return out.reshape(t.size, self.n)


Problem = Union[FddeProblem, VideProblem]


def problem_grid(problem: Problem, nodes_per_delay: int) -> Grid:
    return grid_make(problem.T, problem.h, nodes_per_delay)


def check_same_grid(*objs: Sequence) -> Grid:
    grids = [o.grid for o in objs if o is not None]
    g0 = grids[0]
    for g in grids[1:]:
        if g != g0:
            raise InvalidArgument("objects live on different grids")
    return g0
