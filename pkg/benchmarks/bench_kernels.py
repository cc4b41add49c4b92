"""Time the compiled kernels against the NumPy fallback.

Run with ``python benchmarks/bench_kernels.py [--sizes 512 2048]``.
"""

import argparse
import timeit

import numpy as np

from fracpmp import _kernels_py as py_backend
from fracpmp.volterra import singular_weights
from fracpmp.core import grid_make

try:
    from fracpmp import _kernels as c_backend
except ImportError:  # extension not built
    c_backend = None


def _inputs(N, n, m, seed=0):
    rng = np.random.default_rng(seed)
    grid = grid_make(N / m * 0.5, 0.5, m)
    coef = np.ascontiguousarray(singular_weights(grid, 0.5).coef)
    A = np.ascontiguousarray(np.broadcast_to(-0.5 * np.eye(n), (N + 1, n, n)))
    Ad = np.ascontiguousarray(np.broadcast_to(0.3 * rng.normal(size=(n, n)), (N + 1, n, n)))
    r = rng.normal(size=(N + 1, n))
    base = np.ascontiguousarray(np.broadcast_to(np.ones(n), (N + 1, n)))
    hist = np.zeros((m + 1, n))
    return coef, A, Ad, r, base, hist


def bench(N, n=2, m=128, repeat=5):
    coef, A, Ad, r, base, hist = _inputs(N, n, m)
    x = np.random.default_rng(1).normal(size=(N + 1, n))
    rows = []
    for name, mod in [("python", py_backend), ("cython", c_backend)]:
        if mod is None:
            continue
        t_toep = min(timeit.repeat(lambda: mod.lower_toeplitz_apply(coef, x),
                                   number=1, repeat=repeat))
        t_march = min(timeit.repeat(
            lambda: mod.march_linear(coef, A, Ad, r, m, base, hist, 1e12),
            number=1, repeat=repeat))
        rows.append((name, t_toep, t_march))
    if c_backend is not None:
        y_py, _ = py_backend.march_linear(coef, A, Ad, r, m, base, hist, 1e12)
        y_c, _ = c_backend.march_linear(coef, A, Ad, r, m, base, hist, 1e12)
        diff = float(np.max(np.abs(np.asarray(y_py) - np.asarray(y_c))))
    else:
        diff = float("nan")
    return rows, diff


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[512, 2048, 8192])
    ap.add_argument("--dim", type=int, default=2)
    args = ap.parse_args()
    print(f"{'N':>6} {'backend':>8} {'toeplitz [ms]':>14} {'march [ms]':>12}")
    for N in args.sizes:
        rows, diff = bench(N, args.dim)
        for name, a, b in rows:
            print(f"{N:>6} {name:>8} {1e3 * a:>14.3f} {1e3 * b:>12.3f}")
        print(f"{'':>6} max |cython - python| = {diff:.2e}")


if __name__ == "__main__":
    main()
