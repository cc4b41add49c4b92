# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for product-integration marching.

Mirrors ``_kernels_py``; the selector in ``kernels`` picks one. History sums
are dot products of a reversed weight vector with a contiguous per-component
buffer, split over four accumulators so the additions pipeline.
"""

import numpy as np

from libc.math cimport fabs


cdef inline double _dot(const double* a, const double* b, Py_ssize_t n) noexcept nogil:
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t j = 0
    while j + 4 <= n:
        s0 += a[j] * b[j]
        s1 += a[j + 1] * b[j + 1]
        s2 += a[j + 2] * b[j + 2]
        s3 += a[j + 3] * b[j + 3]
        j += 4
    while j < n:
        s0 += a[j] * b[j]
        j += 1
    return (s0 + s1) + (s2 + s3)


def lower_toeplitz_apply(const double[::1] coef, const double[:, :] x):
    """out[n] = sum_{j<n} coef[n-j] * x[j]  (causal lower-triangular Toeplitz)."""
    cdef Py_ssize_t N1 = x.shape[0], d = x.shape[1], n, i
    if coef.shape[0] < N1:
        raise ValueError("coef shorter than x")
    out = np.zeros((N1, d))
    # rc[N1-1-l] = coef[l], so coef[n-j] for j = 0..n-1 is rc[N1-1-n : N1-1]
    cdef double[::1] rc = np.ascontiguousarray(np.asarray(coef)[:N1][::-1])
    cdef double[:, ::1] xt = np.ascontiguousarray(np.asarray(x).T)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(d):
            for n in range(1, N1):
                o[n, i] = _dot(&rc[N1 - 1 - n], &xt[i, 0], n)
    return out


def march_linear(const double[::1] coef, const double[:, :, :] A,
                 const double[:, :, :] Ad, const double[:, :] r, Py_ssize_t m,
                 const double[:, :] base, const double[:, :] hist,
                 double guard=1e12):
    """Explicit product-rectangle march of

        y_k = base_k + sum_{j<k} coef[k-j] (A_j y_j + Ad_j y_{j-m} + r_j),

    with ``y_{j-m} = hist[j]`` for ``j < m``. Returns ``(y, bad)`` where
    ``bad`` is the first node whose magnitude exceeds ``guard`` (or -1).
    """
    cdef Py_ssize_t N1 = r.shape[0], n = r.shape[1], k, i, l
    cdef double acc, v
    cdef Py_ssize_t bad = -1
    if coef.shape[0] < N1:
        raise ValueError("coef shorter than r")
    y_arr = np.zeros((N1, n))
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] Ft = np.zeros((n, N1))
    cdef double[::1] rc = np.ascontiguousarray(np.asarray(coef)[:N1][::-1])
    with nogil:
        for k in range(N1):
            for i in range(n):
                if k == 0:
                    v = base[0, i]
                else:
                    v = base[k, i] + _dot(&rc[N1 - 1 - k], &Ft[i, 0], k)
                y[k, i] = v
                if not (fabs(v) <= guard):
                    bad = k
            if bad >= 0:
                break
            for i in range(n):
                acc = r[k, i]
                for l in range(n):
                    acc += A[k, i, l] * y[k, l]
                    if k >= m:
                        acc += Ad[k, i, l] * y[k - m, l]
                    else:
                        acc += Ad[k, i, l] * hist[k, l]
                Ft[i, k] = acc
    return y_arr, bad
