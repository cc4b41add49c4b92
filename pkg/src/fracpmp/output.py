"""CSV and JSON writers. Floats are printed with 17 significant digits so
repeated runs produce byte-identical files."""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence

import numpy as np


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: str, header: Sequence[str], columns: Iterable) -> None:
    cols = [np.asarray(c, dtype=float).reshape(-1) for c in columns]
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt(v) for v in row) + "\n")


def trajectory_header(n: int, m: int):
    return (["t"] + [f"y{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)]
            + [f"psi{i + 1}" for i in range(n)] + ["hamiltonian", "residual"])


def write_trajectory_csv(path, y, u, psi, hamiltonian, residual) -> None:
    """One row per node: ``t, y1..yn, u1..um, psi1..psin, hamiltonian, residual``."""
    cols = ([y.grid.t] + list(y.values.T) + list(u.values.T) + list(psi.values.T)
            + [hamiltonian, residual])
    write_csv(path, trajectory_header(y.n, u.m), cols)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_report(path: str, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_clean(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
