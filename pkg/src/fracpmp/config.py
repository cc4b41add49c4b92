"""JSON configuration for the linear-affine problem family used by the CLI.

The family is

    f = a_state y + a_delay y(t-h) + b_control u,
    g = c_y . y + c_yh . y(t-h) + control cost,

with the control cost either ``weight . u`` (``linear``) or
``weight * |u|^2`` (``quadratic``). A minimal document::

    {
      "kind": "fdde", "alpha": 0.5, "delay": 0.5, "horizon": 2.0,
      "nodes_per_delay": 128, "state_dim": 2,
      "a_state": [[0, 0], [0, 0]], "a_delay": [[0, 1], [0, 0]],
      "b_control": [[-1], [-1]], "c_y": [0, 0], "c_yh": [1, -1],
      "control_cost": {"kind": "linear", "weight": 1.0},
      "control_set": {"box": {"lo": [0], "hi": [1]}}
    }

Volterra problems add ``"eta"``: one list of ascending polynomial
coefficients per state component. An optional ``"u0"`` gives a constant
starting control for the sweep.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import (Box, ControlSet, FddeProblem, Finite, LinearDynamics,
                   VideProblem)
from .errors import ConfigError

_KEYS = {"kind", "alpha", "delay", "horizon", "nodes_per_delay", "state_dim",
         "a_state", "a_delay", "b_control", "c_y", "c_yh", "control_cost",
         "control_set", "eta", "u0"}


@dataclass(frozen=True, eq=False)
class LinearProblemConfig:
    kind: str
    alpha: float
    delay: float
    horizon: float
    nodes_per_delay: int
    state_dim: int
    a_state: np.ndarray
    a_delay: np.ndarray
    b_control: np.ndarray
    c_y: np.ndarray
    c_yh: np.ndarray
    cost_kind: str
    cost_weight: np.ndarray
    control_set: ControlSet
    eta: Optional[np.ndarray] = None
    u0: Optional[np.ndarray] = None

    @property
    def control_dim(self) -> int:
        return self.b_control.shape[1]

    def to_dict(self) -> dict:
        if isinstance(self.control_set, Box):
            cs = {"box": {"lo": self.control_set.lo.tolist(),
                          "hi": self.control_set.hi.tolist()}}
        else:
            cs = {"finite": self.control_set.points.tolist()}
        weight = self.cost_weight.tolist()
        if self.cost_kind == "quadratic":
            weight = float(self.cost_weight[0])
        d = {
            "kind": self.kind, "alpha": self.alpha, "delay": self.delay,
            "horizon": self.horizon, "nodes_per_delay": self.nodes_per_delay,
            "state_dim": self.state_dim, "a_state": self.a_state.tolist(),
            "a_delay": self.a_delay.tolist(), "b_control": self.b_control.tolist(),
            "c_y": self.c_y.tolist(), "c_yh": self.c_yh.tolist(),
            "control_cost": {"kind": self.cost_kind, "weight": weight},
            "control_set": cs,
        }
        if self.eta is not None:
            d["eta"] = self.eta.tolist()
        if self.u0 is not None:
            d["u0"] = self.u0.tolist()
        return d

    def build(self) -> Union[FddeProblem, VideProblem]:
        return _build(self)


def _num(d, key, path, kind=float):
    if key not in d:
        raise ConfigError(f"{path}{key}", "missing field")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}{key}", "expected a number")
    if kind is int:
        if int(v) != v:
            raise ConfigError(f"{path}{key}", "expected an integer")
        return int(v)
    v = float(v)
    if not np.isfinite(v):
        raise ConfigError(f"{path}{key}", "must be finite")
    return v


def _array(v, path, shape):
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, "expected a numeric array") from None
    if a.shape != shape:
        raise ConfigError(path, f"expected shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigError(path, "entries must be finite")
    return a


def parse_config(doc: dict) -> LinearProblemConfig:
    """Validate a decoded JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("$", "top level must be an object")
    unknown = sorted(set(doc) - _KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    kind = doc.get("kind")
    if kind not in ("fdde", "vide"):
        raise ConfigError("kind", "must be 'fdde' or 'vide'")
    alpha = _num(doc, "alpha", "")
    if not 0 < alpha < 1:
        raise ConfigError("alpha", "alpha out of (0,1)")
    delay = _num(doc, "delay", "")
    horizon = _num(doc, "horizon", "")
    if delay <= 0 or horizon <= 0:
        raise ConfigError("delay" if delay <= 0 else "horizon", "must be positive")
    npd = _num(doc, "nodes_per_delay", "", int)
    if npd < 1:
        raise ConfigError("nodes_per_delay", "must be >= 1")
    n = _num(doc, "state_dim", "", int)
    if n < 1:
        raise ConfigError("state_dim", "must be >= 1")
    for key in ("a_state", "a_delay", "b_control", "c_y", "c_yh",
                "control_cost", "control_set"):
        if key not in doc:
            raise ConfigError(key, "missing field")
    A = _array(doc["a_state"], "a_state", (n, n))
    Ad = _array(doc["a_delay"], "a_delay", (n, n))
    try:
        B = np.array(doc["b_control"], dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("b_control", "expected a numeric array") from None
    if B.ndim != 2 or B.shape[0] != n or B.shape[1] < 1:
        raise ConfigError("b_control", f"expected shape ({n}, m)")
    m = B.shape[1]
    cy = _array(doc["c_y"], "c_y", (n,))
    cyh = _array(doc["c_yh"], "c_yh", (n,))

    cc = doc["control_cost"]
    if not isinstance(cc, dict) or cc.get("kind") not in ("linear", "quadratic"):
        raise ConfigError("control_cost.kind", "must be 'linear' or 'quadratic'")
    if "weight" not in cc:
        raise ConfigError("control_cost.weight", "missing field")
    if cc["kind"] == "quadratic":
        w = _num(cc, "weight", "control_cost.")
        if w < 0:
            raise ConfigError("control_cost.weight", "quadratic weight must be >= 0")
        weight = np.array([w])
    else:
        raw = cc["weight"]
        raw = [raw] * m if isinstance(raw, (int, float)) and not isinstance(raw, bool) else raw
        weight = _array(raw, "control_cost.weight", (m,))

    U = _control_set(doc["control_set"], m)

    eta = None
    if kind == "vide":
        if "eta" not in doc:
            raise ConfigError("eta", "required for kind 'vide'")
        rows = doc["eta"]
        if not isinstance(rows, list) or len(rows) != n:
            raise ConfigError("eta", f"expected {n} coefficient lists")
        if not all(isinstance(r, list) for r in rows):
            raise ConfigError("eta", "each component needs a coefficient list")
        width = max(len(r) for r in rows)
        if width == 0:
            raise ConfigError("eta", "coefficient lists must be nonempty")
        eta = np.zeros((n, width))
        for i, r in enumerate(rows):
            eta[i, : len(r)] = _array(r, f"eta[{i}]", (len(r),))
    elif "eta" in doc:
        raise ConfigError("eta", "only allowed for kind 'vide'")

    u0 = None
    if "u0" in doc:
        u0 = _array(np.atleast_1d(doc["u0"]), "u0", (m,))
        if not U.contains(u0):
            raise ConfigError("u0", "initial control outside the control set")

    return LinearProblemConfig(kind, alpha, delay, horizon, npd, n, A, Ad, B,
                               cy, cyh, cc["kind"], weight, U, eta, u0)


def _control_set(cs, m) -> ControlSet:
    if not isinstance(cs, dict) or len(cs) != 1 or not ({"box", "finite"} & set(cs)):
        raise ConfigError("control_set", "expected exactly one of 'box', 'finite'")
    if "box" in cs:
        b = cs["box"]
        if not isinstance(b, dict) or "lo" not in b or "hi" not in b:
            raise ConfigError("control_set.box", "needs 'lo' and 'hi'")
        lo = _array(np.atleast_1d(b["lo"]), "control_set.box.lo", (m,))
        hi = _array(np.atleast_1d(b["hi"]), "control_set.box.hi", (m,))
        if np.any(lo > hi):
            raise ConfigError("control_set.box", "lo must not exceed hi")
        return Box(lo, hi)
    pts = cs["finite"]
    if not isinstance(pts, list) or not pts:
        raise ConfigError("control_set.finite", "expected a nonempty list")
    P = np.array([np.atleast_1d(p) for p in pts], dtype=float) if all(
        isinstance(p, (list, int, float)) for p in pts) else None
    if P is None or P.ndim != 2 or P.shape[1] != m:
        raise ConfigError("control_set.finite", f"points must have dimension {m}")
    try:
        return Finite(P)
    except ValueError as exc:
        raise ConfigError("control_set.finite", str(exc)) from None


def _build(cfg: LinearProblemConfig):
    A, Ad, B = cfg.a_state, cfg.a_delay, cfg.b_control
    cy, cyh, w = cfg.c_y, cfg.c_yh, cfg.cost_weight
    n = cfg.state_dim
    quad = cfg.cost_kind == "quadratic"

    def g(t, y, yh, u):
        cost = w[0] * np.sum(u * u, axis=1) if quad else u @ w
        return y @ cy + yh @ cyh + cost

    def gy(t, y, yh, u):
        return np.broadcast_to(cy, (len(y), n))

    def gyh(t, y, yh, u):
        return np.broadcast_to(cyh, (len(y), n))

    lin = LinearDynamics(A, Ad, B)
    common = dict(alpha=cfg.alpha, T=cfg.horizon, h=cfg.delay, n=n, g=g,
                  g_y=gy, g_yh=gyh, U=cfg.control_set, vectorized=True,
                  linear=lin)
    if cfg.kind == "fdde":
        return FddeProblem(
            f=lambda t, y, yh, u: y @ A.T + yh @ Ad.T + u @ B.T,
            f_y=lambda t, y, yh, u: np.broadcast_to(A, (len(y), n, n)),
            f_yh=lambda t, y, yh, u: np.broadcast_to(Ad, (len(y), n, n)),
            **common)
    coeffs = cfg.eta

    def eta(t):
        t = np.asarray(t, dtype=float)
        powers = t[:, None] ** np.arange(coeffs.shape[1])
        return powers @ coeffs.T

    return VideProblem(
        f=lambda t, s, y, yh, u: y @ A.T + yh @ Ad.T + u @ B.T,
        f_y=lambda t, s, y, yh, u: np.broadcast_to(A, (len(y), n, n)),
        f_yh=lambda t, s, y, yh, u: np.broadcast_to(Ad, (len(y), n, n)),
        eta=eta, **common)


def load_config(text: str) -> LinearProblemConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(doc)


def load_problem(text: str) -> Union[FddeProblem, VideProblem]:
    """Parse a JSON configuration into a problem with exact Jacobians."""
    return load_config(text).build()


def dump_config(cfg: LinearProblemConfig) -> str:
    """Canonical JSON text; ``load_config(dump_config(c))`` reproduces ``c``."""
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


def example4_config(nodes_per_delay: int = 128) -> LinearProblemConfig:
    """The two-state pure-delay example with a box-constrained scalar control."""
    return parse_config({
        "kind": "fdde", "alpha": 0.5, "delay": 0.5, "horizon": 2.0,
        "nodes_per_delay": nodes_per_delay, "state_dim": 2,
        "a_state": [[0, 0], [0, 0]], "a_delay": [[0, 1], [0, 0]],
        "b_control": [[-1], [-1]], "c_y": [0, 0], "c_yh": [1, -1],
        "control_cost": {"kind": "linear", "weight": 1.0},
        "control_set": {"box": {"lo": [0], "hi": [1]}},
        "u0": [0.5],
    })
