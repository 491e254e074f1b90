"""Sinkhorn scaling and the KL projections used by the mirror schemes."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .measures import _as_matrix

logger = logging.getLogger(__name__)

# below this kernel entry the scalings can overflow, so switch to log domain
LOG_DOMAIN_THRESHOLD = 1e-300
_LOG_THRESHOLD = float(np.log(LOG_DOMAIN_THRESHOLD))


@dataclass(frozen=True)
class SinkhornConfig:
    epsilon: float = 1.0
    max_iters: int = 100_000
    marginal_tol: float = 1e-9
    log_domain: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.marginal_tol > 0:
            raise ValueError("marginal_tol must be positive")


@dataclass
class ScalingResult:
    """Log of a scaled kernel ``L + f 1' + 1 g'`` and its diagnostics."""

    log_plan: np.ndarray
    f: np.ndarray
    g: np.ndarray
    iterations: int
    marginal_error: float
    converged: bool
    log_domain: bool


def scale_log_kernel(L, a, b, tol=1e-9, max_iter=100_000, log_domain=False) -> ScalingResult:
    """Find log-scalings ``f, g`` so that ``exp(L + f + g)`` has marginals
    ``(a, b)``. ``L`` may hold arbitrarily large or small values; the
    standard-domain loop is used unless some kernel entry would fall below
    1e-300 after shifting by the maximum.
    """
    L = np.ascontiguousarray(L, dtype=float)
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    n, m = L.shape
    if (n, m) != (len(a), len(b)):
        raise ValueError(f"kernel shape {L.shape} does not match marginals ({n}, {m})")
    shift = float(L.max())
    Ls = L - shift
    use_log = log_domain or float(Ls.min()) < _LOG_THRESHOLD
    if use_log:
        f = np.zeros(n)
        g = np.full(m, 0.0)
        it, err = kernels.log_sinkhorn(Ls, np.log(a), np.log(b), f, g, tol, max_iter)
        log_plan = Ls + f[:, None] + g[None, :]
    else:
        K = np.exp(Ls)
        u = np.ones(n)
        v = np.ones(m)
        it, err = kernels.sinkhorn_scale(K, a, b, u, v, tol, max_iter)
        f, g = np.log(u), np.log(v)
        log_plan = Ls + f[:, None] + g[None, :]
    f = f - shift
    return ScalingResult(log_plan, f, g, int(it), float(err), bool(err <= tol), use_log)


def _check_positive(P):
    P = _as_matrix(P)
    if P.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if not np.all(np.isfinite(P)):
        raise ValueError("matrix contains non-finite entries")
    if np.any(P <= 0):
        raise ValueError("KL projection needs a strictly positive matrix")
    return P


def kl_project_couplings(P, a, b, config: SinkhornConfig | None = None) -> np.ndarray:
    """KL projection of a positive matrix onto the transport polytope
    ``{Q >= 0 : Q 1 = a, Q' 1 = b}``, i.e. ``diag(u) P diag(v)``."""
    config = config or SinkhornConfig()
    P = _check_positive(P)
    res = scale_log_kernel(np.log(P), a, b, config.marginal_tol, config.max_iters, config.log_domain)
    if not res.converged:
        logger.warning("Sinkhorn projection stopped at error %.3g after %d iterations",
                       res.marginal_error, res.iterations)
    return np.exp(res.log_plan)


def kl_project_second_marginal(P, b) -> np.ndarray:
    """Closed-form projection onto ``{Q >= 0 : Q' 1 = b}``:
    ``Q_ij = P_ij b_j / sum_k P_kj``."""
    P = _as_matrix(P)
    cs = P.sum(axis=0)
    if np.any(cs <= 0) or not np.all(np.isfinite(P)):
        raise ValueError("every column of P needs positive finite mass")
    return P * (np.asarray(b, dtype=float) / cs)[None, :]


def kl_project_first_marginal(P, a) -> np.ndarray:
    """Closed-form projection onto ``{Q >= 0 : Q 1 = a}`` (row reweighting)."""
    P = _as_matrix(P)
    rs = P.sum(axis=1)
    if np.any(rs <= 0) or not np.all(np.isfinite(P)):
        raise ValueError("every row of P needs positive finite mass")
    return P * (np.asarray(a, dtype=float) / rs)[:, None]


def logsumexp(M, axis):
    mx = np.max(M, axis=axis, keepdims=True)
    return np.squeeze(mx, axis=axis) + np.log(np.exp(M - mx).sum(axis=axis))


def log_project_second_marginal(L, b) -> np.ndarray:
    return L - logsumexp(L, 0)[None, :] + np.log(b)[None, :]


def log_project_first_marginal(L, a) -> np.ndarray:
    return L - logsumexp(L, 1)[:, None] + np.log(a)[:, None]


def kl_divergence(Q, P) -> float:
    """Generalized KL ``sum Q log(Q/P) - Q + P`` with ``0 log 0 = 0``."""
    Q = _as_matrix(Q)
    P = _as_matrix(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(Q > 0, Q * np.log(Q / P), 0.0)
    return float(np.sum(t - Q + P))


@dataclass
class EotResult:
    """Entropic plan maximizing ``<C, P> - eps KL(P | a b')``.

    ``f, g`` are dual prices with ``P_ij = a_i b_j exp((C_ij - f_i - g_j)/eps)``;
    ``dual_value`` is the matching dual objective, an upper bound on the
    entropic value for any prices.
    """

    plan: np.ndarray
    f: np.ndarray
    g: np.ndarray
    value: float
    dual_value: float
    iterations: int
    marginal_error: float
    converged: bool


def sinkhorn_eot(C, a, b, config: SinkhornConfig | None = None) -> EotResult:
    """Entropic OT for a cost-to-maximize ``C``.

    Returns the last iterate with ``converged=False`` when ``max_iters`` is
    reached before the marginal tolerance.
    """
    config = config or SinkhornConfig(epsilon=0.1, marginal_tol=1e-6)
    C = np.asarray(C, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite")
    eps = config.epsilon
    L = C / eps + np.log(a)[:, None] + np.log(b)[None, :]
    res = scale_log_kernel(L, a, b, config.marginal_tol, config.max_iters, config.log_domain)
    if not res.converged:
        logger.warning("EOT Sinkhorn did not reach tol %.1e (error %.3g)", config.marginal_tol,
                       res.marginal_error)
    P = np.exp(res.log_plan)
    f = -eps * res.f
    g = -eps * res.g
    value = float(np.sum(C * P)) - eps * kl_divergence(P, np.outer(a, b))
    dual_value = float(f @ a + g @ b + eps * P.sum() - eps)
    return EotResult(P, f, g, value, dual_value, res.iterations, res.marginal_error, res.converged)
