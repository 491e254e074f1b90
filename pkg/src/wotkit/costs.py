"""Concave production functionals over discrete kernels.

A cost model evaluates the output ``F(x_i, p)`` of firm type ``i`` when it
employs the (possibly unnormalized) vector of worker masses ``p`` over the
worker types, together with its gradient in ``p``. The batch methods take a
matrix whose row ``i`` is the kernel of firm ``i``.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

SIMPLEX = "simplex"
CONE = "cone"
_DOMAINS = (SIMPLEX, CONE)
SKILL_FLOOR = 1e-30


class CostModel(ABC):
    """Production functional ``(i, p) -> F(x_i, p)``, concave in ``p``.

    ``domain`` is ``"simplex"`` when ``p`` is a probability vector (WOT) and
    ``"cone"`` when any nonnegative vector is allowed (WOTUK).
    """

    domain: str = SIMPLEX
    analytic_gradient: bool = True

    def __init__(self, n_firms: int, n_workers: int, domain: str = SIMPLEX):
        if domain not in _DOMAINS:
            raise ValueError(f"domain must be one of {_DOMAINS}, got {domain!r}")
        self.n_firms = int(n_firms)
        self.n_workers = int(n_workers)
        self.domain = domain

    @abstractmethod
    def values(self, Q: np.ndarray) -> np.ndarray:
        """Row-wise outputs; returns shape ``(n_firms,)``."""

    @abstractmethod
    def gradients(self, Q: np.ndarray) -> np.ndarray:
        """Row-wise gradients; returns shape ``(n_firms, n_workers)``."""

    def value(self, i: int, p) -> float:
        return float(self._single(i, p, self.values))

    def gradient(self, i: int, p) -> np.ndarray:
        return self._single(i, p, self.gradients)

    def _single(self, i, p, batch):
        # evaluate one firm by padding the other rows with copies of p
        p = np.asarray(p, dtype=float)
        Q = np.broadcast_to(p, (self.n_firms, self.n_workers)).copy()
        return batch(Q)[i]

    def _check_shape(self, Q):
        Q = np.asarray(Q, dtype=float)
        if Q.shape != (self.n_firms, self.n_workers):
            raise ValueError(
                f"kernel matrix has shape {Q.shape}, expected {(self.n_firms, self.n_workers)}"
            )
        return Q


class LinearCost(CostModel):
    """``F(x_i, p) = <F_i, p>``: the classical Kantorovich objective."""

    def __init__(self, F, domain: str = SIMPLEX):
        F = np.array(F, dtype=float)
        if F.ndim != 2:
            raise ValueError("linear cost matrix must be 2-D")
        if not np.all(np.isfinite(F)):
            raise ValueError("linear cost matrix contains NaN or infinite entries")
        super().__init__(*F.shape, domain=domain)
        F.setflags(write=False)
        self.F = F

    def values(self, Q):
        return np.einsum("ij,ij->i", self.F, self._check_shape(Q))

    def gradients(self, Q):
        self._check_shape(Q)
        return self.F.copy()


def linear_cost(F_matrix, domain: str = SIMPLEX) -> LinearCost:
    return LinearCost(F_matrix, domain=domain)


@dataclass(frozen=True)
class CesParams:
    """Returns-to-scale ``zeta`` and substitution ``sigma``, both in (0, 1]."""

    zeta: float = 0.5
    sigma: float = 0.5

    def __post_init__(self):
        for name in ("zeta", "sigma"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ValueError(f"CES {name} must lie in (0, 1] for concavity, got {v}")


def _check_firms(firms) -> np.ndarray:
    X = np.atleast_2d(np.asarray(firms, dtype=float))
    if X.shape[1] != 3:
        raise ValueError("CES firm types are (z, alpha1, alpha2) triples")
    if np.any(np.abs(X[:, 1] + X[:, 2] - 1.0) > 1e-9):
        raise ValueError("CES firm intensities must satisfy alpha1 + alpha2 = 1")
    if np.any(X[:, 1:] < 0):
        raise ValueError("CES firm intensities must be nonnegative")
    return X


class CesProduction:
    """``F((z, a1, a2), (s1, s2)) = z/zeta * (a1 s1^sig + a2 s2^sig)^(zeta/sig)``,
    vectorized over firms: row ``i`` of ``S`` is the skill bundle of firm ``i``."""

    def __init__(self, firms, params: CesParams | None = None):
        self.firms = _check_firms(firms)
        self.params = params or CesParams()

    def __len__(self):
        return len(self.firms)

    def _inner(self, S):
        sig = self.params.sigma
        return self.firms[:, 1] * S[:, 0] ** sig + self.firms[:, 2] * S[:, 1] ** sig

    def value(self, S):
        S = np.asarray(S, dtype=float)
        if np.any(S < 0):
            raise ValueError("CES skills must be nonnegative")
        zeta, sig = self.params.zeta, self.params.sigma
        return self.firms[:, 0] / zeta * self._inner(S) ** (zeta / sig)

    def gradient(self, S):
        S = np.asarray(S, dtype=float)
        if np.any(S < 0):
            raise ValueError("CES skills must be nonnegative")
        zeta, sig = self.params.zeta, self.params.sigma
        S = np.maximum(S, SKILL_FLOOR)
        inner = self._inner(S)
        scale = self.firms[:, 0] * inner ** (zeta / sig - 1.0)
        alphas = self.firms[:, 1:3]
        return scale[:, None] * alphas * S ** (sig - 1.0)


def ces_value(firm, skill, params: CesParams | None = None) -> float:
    """Output of a single firm ``(z, a1, a2)`` with skill bundle ``(s1, s2)``."""
    s = np.asarray(skill, dtype=float).reshape(1, 2)
    return float(CesProduction(np.reshape(firm, (1, 3)), params).value(s)[0])


def ces_gradient(firm, skill, params: CesParams | None = None) -> np.ndarray:
    s = np.asarray(skill, dtype=float).reshape(1, 2)
    return CesProduction(np.reshape(firm, (1, 3)), params).gradient(s)[0]


class _CallableProduction:
    """Adapter for per-firm callables ``F(x, s)`` and ``grad_F(x, s)``."""

    def __init__(self, F, grad_F, firms):
        self.F = F
        self.grad_F = grad_F
        self.firms = list(firms)

    def __len__(self):
        return len(self.firms)

    def value(self, S):
        return np.array([self.F(x, s) for x, s in zip(self.firms, S)], dtype=float)

    def gradient(self, S):
        return np.array([self.grad_F(x, s) for x, s in zip(self.firms, S)], dtype=float)


class AggregateCost(CostModel):
    """Output depending on the aggregate skill ``s = sum_j p_j y_j``.

    With ``domain="simplex"`` this is a barycentric cost (``p`` sums to one);
    with ``domain="cone"`` it is a conical cost where the mass of ``p`` scales
    the aggregate. The gradient follows from the chain rule,
    ``dF/dp_j = <grad_s F(x, s), y_j>``.
    """

    def __init__(self, production, worker_points, domain: str = SIMPLEX):
        Y = np.asarray(worker_points, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        super().__init__(len(production), Y.shape[0], domain=domain)
        self.production = production
        self.worker_points = Y

    def aggregate(self, Q):
        return self._check_shape(Q) @ self.worker_points

    def values(self, Q):
        return self.production.value(self.aggregate(Q))

    def gradients(self, Q):
        return self.production.gradient(self.aggregate(Q)) @ self.worker_points.T


def barycentric_cost(F, grad_F, firms, worker_points) -> AggregateCost:
    return AggregateCost(_CallableProduction(F, grad_F, firms), worker_points, SIMPLEX)


def conical_cost(F, grad_F, firms, worker_points) -> AggregateCost:
    return AggregateCost(_CallableProduction(F, grad_F, firms), worker_points, CONE)


def ces_cost(firms, worker_points, params: CesParams | None = None, domain: str = SIMPLEX):
    """CES production on the aggregate skill, barycentric or conical."""
    return AggregateCost(CesProduction(firms, params), worker_points, domain)


def ces_matrix(firms, worker_points, params: CesParams | None = None) -> np.ndarray:
    """``F(x_i, y_j)`` for every pair: the cost matrix of the OT baseline."""
    prod = CesProduction(firms, params)
    Y = np.asarray(worker_points, dtype=float)
    out = np.empty((len(prod), len(Y)))
    for j, y in enumerate(Y):
        out[:, j] = prod.value(np.broadcast_to(y, (len(prod), 2)))
    return out


class FunctionCost(CostModel):
    """Cost from a scalar callable ``value_fn(i, p)``.

    When ``gradient_fn`` is omitted the gradient is taken by central finite
    differences and ``analytic_gradient`` is False, which solve reports echo.
    """

    def __init__(self, value_fn, n_firms, n_workers, domain=SIMPLEX, gradient_fn=None, step=1e-6):
        super().__init__(n_firms, n_workers, domain)
        self.value_fn = value_fn
        self.gradient_fn = gradient_fn
        self.step = step
        self.analytic_gradient = gradient_fn is not None

    def values(self, Q):
        Q = self._check_shape(Q)
        return np.array([self.value_fn(i, Q[i]) for i in range(self.n_firms)])

    def gradients(self, Q):
        Q = self._check_shape(Q)
        if self.gradient_fn is not None:
            return np.array([self.gradient_fn(i, Q[i]) for i in range(self.n_firms)], dtype=float)
        G = np.empty_like(Q)
        h = self.step
        for i in range(self.n_firms):
            for j in range(self.n_workers):
                p = Q[i].copy()
                p[j] += h
                up = self.value_fn(i, p)
                p[j] -= 2 * h
                G[i, j] = (up - self.value_fn(i, p)) / (2 * h)
        return G
