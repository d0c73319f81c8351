"""Numpy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable (or disabled with
``WINDADJUST_PURE=1``). Signatures and results match the extension.
"""
import numpy as np


def analysis_step(x, lo, hi):
    x = np.ascontiguousarray(x, dtype=float)
    n = x.shape[1]
    L = len(lo)
    ext = x[:, np.arange(n + L) % n]
    a = np.zeros((x.shape[0], n // 2))
    d = np.zeros_like(a)
    for k in range(L):
        seg = ext[:, k:k + n:2]
        a += lo[k] * seg
        d += hi[k] * seg
    return a, d


def synthesis_step(a, d, lo, hi):
    m, half = a.shape
    n = 2 * half
    L = len(lo)
    width = -(-(n + L) // n) * n
    ext = np.zeros((m, width))
    for k in range(L):
        ext[:, k:k + n:2] += lo[k] * a + hi[k] * d
    return ext.reshape(m, -1, n).sum(axis=1)


def irls_quantile(X, Y, tau, eps, tol, max_iter):
    X = np.asarray(X, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    W = Y.shape[0]
    d = X.shape[1]
    beta = np.linalg.solve(X.T @ X, X.T @ Y.T).T
    iters = np.zeros(W, dtype=np.int64)
    conv = np.zeros(W, dtype=bool)
    active = np.arange(W)
    for it in range(1, max_iter + 1):
        if active.size == 0:
            break
        r = Y[active] - beta[active] @ X.T
        wt = np.where(r >= 0, tau, 1.0 - tau) / np.maximum(np.abs(r), eps)
        A = np.einsum("wi,ij,ik->wjk", wt, X, X)
        b = np.einsum("wi,ij,wi->wj", wt, X, Y[active])
        new = np.linalg.solve(A, b[..., None])[..., 0]
        change = np.abs(new - beta[active]).max(axis=1)
        beta[active] = new
        iters[active] = it
        done = change < tol
        conv[active[done]] = True
        active = active[~done]
    return beta.reshape(W, d), iters, conv


def soft_threshold_blocks(coeffs, thresh, block):
    coeffs = np.asarray(coeffs, dtype=float)
    T = coeffs.shape[1]
    blk = np.minimum(np.arange(T) // block, thresh.shape[1] - 1)
    th = thresh[:, blk]
    mag = np.abs(coeffs) - th
    return np.where(mag > 0.0, np.sign(coeffs) * mag, 0.0)
