"""Problem builders shared by the test modules."""

import numpy as np

from fracpmp import Box, FddeProblem, LinearDynamics, VideProblem
from fracpmp.config import example4_config


def linear_fdde(alpha, T, h, A, Ad, B, c_y=None, c_yh=None, quad=0.0,
                lin=None, U=None, fast=True):
    """``f = A y + Ad y_h + B u``, ``g = c_y.y + c_yh.y_h + lin.u + quad |u|^2``."""
    A, Ad, B = (np.atleast_2d(np.asarray(M, float)) for M in (A, Ad, B))
    n, m = B.shape
    c_y = np.zeros(n) if c_y is None else np.asarray(c_y, float)
    c_yh = np.zeros(n) if c_yh is None else np.asarray(c_yh, float)
    lin = np.zeros(m) if lin is None else np.atleast_1d(np.asarray(lin, float))
    U = U or Box(-np.ones(m), np.ones(m))
    return FddeProblem(
        alpha, T, h, n,
        f=lambda t, y, yh, u: y @ A.T + yh @ Ad.T + u @ B.T,
        f_y=lambda t, y, yh, u: np.broadcast_to(A, (len(t), n, n)),
        f_yh=lambda t, y, yh, u: np.broadcast_to(Ad, (len(t), n, n)),
        g=lambda t, y, yh, u: y @ c_y + yh @ c_yh + u @ lin + quad * np.sum(u * u, axis=1),
        g_y=lambda t, y, yh, u: np.broadcast_to(c_y, (len(t), n)),
        g_yh=lambda t, y, yh, u: np.broadcast_to(c_yh, (len(t), n)),
        U=U, vectorized=True, linear=LinearDynamics(A, Ad, B) if fast else None)


def random_linear_fdde(rng, alpha=0.6, T=1.0, h=0.25):
    A = 0.5 * rng.normal(size=(2, 2))
    Ad = 0.5 * rng.normal(size=(2, 2))
    B = rng.normal(size=(2, 1))
    return linear_fdde(alpha, T, h, A, Ad, B, c_y=rng.normal(size=2),
                       c_yh=rng.normal(size=2), quad=rng.uniform(0.5, 1.0))


def example4_problem(nodes_per_delay=128):
    return example4_config(nodes_per_delay).build()


def scalar_lq(alpha=0.5, T=1.0, h=0.5, U=None):
    """Smooth scalar problem with quadratic state and control cost."""
    return FddeProblem(
        alpha, T, h, 1,
        f=lambda t, y, yh, u: -y + 0.5 * yh + u,
        f_y=lambda t, y, yh, u: -np.ones((len(t), 1, 1)),
        f_yh=lambda t, y, yh, u: 0.5 * np.ones((len(t), 1, 1)),
        g=lambda t, y, yh, u: 0.5 * (y[:, 0] ** 2 + yh[:, 0] ** 2 + u[:, 0] ** 2),
        g_y=lambda t, y, yh, u: y,
        g_yh=lambda t, y, yh, u: yh,
        U=U or Box([-2.0], [2.0]), vectorized=True)


def scalar_vide(a, ad=0.0, alpha=0.5, T=1.0, h=0.5, eta=None, c=0.0, fast=False,
                U=None):
    """``y = eta + int (t-s)^(a-1) (a y + ad y_h + u) ds`` with cost ``c y``."""
    eta = eta or (lambda t: np.ones_like(t)[:, None])
    return VideProblem(
        alpha, T, h, 1,
        f=lambda t, s, y, yh, u: a * y + ad * yh + u,
        f_y=lambda t, s, y, yh, u: np.full((len(s), 1, 1), float(a)),
        f_yh=lambda t, s, y, yh, u: np.full((len(s), 1, 1), float(ad)),
        g=lambda t, y, yh, u: c * y[:, 0] + 0 * u[:, 0],
        g_y=lambda t, y, yh, u: np.full((len(t), 1), float(c)),
        g_yh=lambda t, y, yh, u: np.zeros((len(t), 1)),
        eta=eta, U=U or Box([0.0], [0.0]), vectorized=True,
        linear=LinearDynamics([[a]], [[ad]], [[1.0]]) if fast else None)
