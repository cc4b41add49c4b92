"""NumPy reference implementation of the compiled kernels."""

import numpy as np


def lower_toeplitz_apply(coef, x):
    coef = np.asarray(coef, dtype=float)
    x = np.asarray(x, dtype=float)
    N1, d = x.shape
    if coef.shape[0] < N1:
        raise ValueError("coef shorter than x")
    c = coef[:N1].copy()
    c[0] = 0.0
    out = np.empty((N1, d))
    for i in range(d):
        out[:, i] = np.convolve(c, x[:, i])[:N1]
    return out


def march_linear(coef, A, Ad, r, m, base, hist, guard=1e12):
    r = np.asarray(r, dtype=float)
    N1, n = r.shape
    if coef.shape[0] < N1:
        raise ValueError("coef shorter than r")
    y = np.zeros((N1, n))
    F = np.zeros((N1, n))
    y[0] = base[0]
    for k in range(N1):
        if k:
            y[k] = base[k] + coef[k:0:-1] @ F[:k]
            if not np.all(np.abs(y[k]) <= guard):
                return y, k
        yd = y[k - m] if k >= m else hist[k]
        F[k] = A[k] @ y[k] + Ad[k] @ yd + r[k]
    return y, -1
