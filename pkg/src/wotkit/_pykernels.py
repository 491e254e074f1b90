"""Pure numpy implementations of the hot loops.

Signatures mirror ``_ckernels`` exactly; the backend is chosen in
``wotkit._backend``. Arrays are float64 and C-contiguous. ``u, v`` and
``f, g`` are updated in place so callers can warm start.
"""
import numpy as np


def sinkhorn_scale(K, a, b, u, v, tol, max_iter):
    """Alternate row/column scalings of ``K`` until the row marginal of
    ``diag(u) K diag(v)`` is within ``tol`` of ``a`` (sup norm).

    The column marginal is exact after every column update.
    Returns ``(iterations, row_error)``.
    """
    err = np.inf
    it = 0
    while True:
        Kv = K @ v
        err = float(np.max(np.abs(u * Kv - a)))
        if err <= tol or it >= max_iter:
            break
        np.divide(a, Kv, out=u)
        np.divide(b, K.T @ u, out=v)
        it += 1
    return it, err


def _lse_rows(M):
    mx = M.max(axis=1)
    return mx + np.log(np.exp(M - mx[:, None]).sum(axis=1))


def log_sinkhorn(L, loga, logb, f, g, tol, max_iter):
    """Log-domain Sinkhorn on the log-kernel ``L``.

    The scaled plan is ``exp(L + f[:, None] + g[None, :])``. Same stopping
    rule and return value as :func:`sinkhorn_scale`.
    """
    a = np.exp(loga)
    err = np.inf
    it = 0
    while True:
        M = L + f[:, None] + g[None, :]
        err = float(np.max(np.abs(np.exp(M).sum(axis=1) - a)))
        if err <= tol or it >= max_iter:
            break
        f[:] = loga - _lse_rows(L + g[None, :])
        g[:] = logb - _lse_rows((L + f[:, None]).T)
        it += 1
    return it, err


def pivot(T, row, col):
    """Gauss-Jordan pivot of tableau ``T`` on ``(row, col)``, in place."""
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    nz = np.nonzero(factor)[0]
    if nz.size:
        T[nz] -= np.outer(factor[nz], T[row])
    T[nz, col] = 0.0
    T[row, col] = 1.0


def ratio_test(T, col, basis, n_rows, tol):
    """Minimum-ratio leaving row for entering column ``col``.

    Only the first ``n_rows`` rows are constraints; the right-hand side is the
    last column. Ties go to the row whose basic variable has the smallest
    index (Bland). Returns -1 when the column is unbounded.
    """
    column = T[:n_rows, col]
    cand = np.nonzero(column > tol)[0]
    if cand.size == 0:
        return -1
    ratios = T[cand, -1] / column[cand]
    best = ratios.min()
    tied = cand[ratios <= best + 1e-12 * max(1.0, abs(best))]
    return int(tied[np.argmin(basis[tied])])
