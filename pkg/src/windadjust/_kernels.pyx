# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Mirrors :mod:`windadjust._fallback` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()

cdef enum:
    MAXD = 16


def analysis_step(const double[:, ::1] x, const double[::1] lo, const double[::1] hi):
    """One periodized filterbank split of every row of ``x``."""
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1], L = lo.shape[0]
    cdef Py_ssize_t half = n // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a_arr = np.empty((m, half))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] d_arr = np.empty((m, half))
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] d = d_arr
    cdef Py_ssize_t i, t, k, idx
    cdef double sa, sd, v
    with nogil:
        for i in range(m):
            for t in range(half):
                sa = 0.0
                sd = 0.0
                idx = 2 * t
                for k in range(L):
                    v = x[i, idx]
                    sa = sa + lo[k] * v
                    sd = sd + hi[k] * v
                    idx = idx + 1
                    if idx == n:
                        idx = 0
                a[i, t] = sa
                d[i, t] = sd
    return a_arr, d_arr


def synthesis_step(const double[:, ::1] a, const double[:, ::1] d,
                   const double[::1] lo, const double[::1] hi):
    """Adjoint (and inverse) of :func:`analysis_step`."""
    cdef Py_ssize_t m = a.shape[0], half = a.shape[1], L = lo.shape[0]
    cdef Py_ssize_t n = 2 * half
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.zeros((m, n))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, t, k, idx
    cdef double va, vd
    with nogil:
        for i in range(m):
            for t in range(half):
                va = a[i, t]
                vd = d[i, t]
                idx = 2 * t
                for k in range(L):
                    out[i, idx] += lo[k] * va + hi[k] * vd
                    idx = idx + 1
                    if idx == n:
                        idx = 0
    return out_arr


cdef int _cholesky_solve(double* A, double* b, Py_ssize_t d) noexcept nogil:
    # in-place on a row-major d x d SPD matrix; solution written to b
    cdef Py_ssize_t i, j, k
    cdef double s
    for j in range(d):
        s = A[j * d + j]
        for k in range(j):
            s -= A[j * d + k] * A[j * d + k]
        if s <= 0.0:
            return -1
        A[j * d + j] = sqrt(s)
        for i in range(j + 1, d):
            s = A[i * d + j]
            for k in range(j):
                s -= A[i * d + k] * A[j * d + k]
            A[i * d + j] = s / A[j * d + j]
    for i in range(d):
        s = b[i]
        for k in range(i):
            s -= A[i * d + k] * b[k]
        b[i] = s / A[i * d + i]
    for i in range(d - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, d):
            s -= A[k * d + i] * b[k]
        b[i] = s / A[i * d + i]
    return 0


def irls_quantile(const double[:, ::1] X, const double[:, ::1] Y, double tau,
                  double eps, double tol, int max_iter):
    """Check-loss regression of every row of ``Y`` on the shared design ``X``.

    Returns ``(beta, n_iter, converged)``.
    """
    cdef Py_ssize_t p = X.shape[0], d = X.shape[1], W = Y.shape[0]
    if d > MAXD:
        raise ValueError("too many coefficients")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] beta_arr = np.zeros((W, d))
    cdef cnp.ndarray[cnp.int64_t, ndim=1] iters_arr = np.zeros(W, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] conv_arr = np.zeros(W, dtype=np.uint8)
    cdef double[:, ::1] beta = beta_arr
    cdef cnp.int64_t[::1] iters = iters_arr
    cdef cnp.uint8_t[::1] conv = conv_arr
    cdef double A[MAXD * MAXD]
    cdef double b[MAXD]
    cdef double cur[MAXD]
    cdef Py_ssize_t w, i, j, k, it
    cdef double r, wt, fit, change
    cdef int status = 0
    with nogil:
        for w in range(W):
            # unweighted least-squares start
            for j in range(d):
                b[j] = 0.0
                for k in range(d):
                    A[j * d + k] = 0.0
            for i in range(p):
                for j in range(d):
                    b[j] += X[i, j] * Y[w, i]
                    for k in range(d):
                        A[j * d + k] += X[i, j] * X[i, k]
            if _cholesky_solve(A, b, d) != 0:
                status = -1
                break
            for j in range(d):
                cur[j] = b[j]
            it = 0
            while it < max_iter:
                it += 1
                for j in range(d):
                    b[j] = 0.0
                    for k in range(d):
                        A[j * d + k] = 0.0
                for i in range(p):
                    fit = 0.0
                    for j in range(d):
                        fit += X[i, j] * cur[j]
                    r = Y[w, i] - fit
                    wt = tau if r >= 0.0 else 1.0 - tau
                    wt = wt / (fabs(r) if fabs(r) > eps else eps)
                    for j in range(d):
                        b[j] += wt * X[i, j] * Y[w, i]
                        for k in range(d):
                            A[j * d + k] += wt * X[i, j] * X[i, k]
                if _cholesky_solve(A, b, d) != 0:
                    status = -1
                    break
                change = 0.0
                for j in range(d):
                    if fabs(b[j] - cur[j]) > change:
                        change = fabs(b[j] - cur[j])
                    cur[j] = b[j]
                if change < tol:
                    conv[w] = 1
                    break
            if status != 0:
                break
            iters[w] = it
            for j in range(d):
                beta[w, j] = cur[j]
    if status != 0:
        raise np.linalg.LinAlgError("singular weighted design")
    return beta_arr, iters_arr, conv_arr.astype(bool)


def soft_threshold_blocks(const double[:, ::1] coeffs, const double[:, ::1] thresh,
                          Py_ssize_t block):
    """Shrink ``coeffs[k, t]`` towards zero by ``thresh[k, t // block]``."""
    cdef Py_ssize_t K = coeffs.shape[0], T = coeffs.shape[1], nb = thresh.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.empty((K, T))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, t, blk
    cdef double c, th, mag
    with nogil:
        for k in range(K):
            for t in range(T):
                blk = t // block
                if blk >= nb:
                    blk = nb - 1
                th = thresh[k, blk]
                c = coeffs[k, t]
                mag = fabs(c) - th
                if mag <= 0.0:
                    out[k, t] = 0.0
                elif c > 0.0:
                    out[k, t] = mag
                else:
                    out[k, t] = -mag
    return out_arr
