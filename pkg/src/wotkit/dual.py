"""Mirror descent on worker wages with an inner mirror ascent on the plan,
followed by LP recovery of the convex wage envelope.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bregman import log_project_first_marginal
from .costs import CostModel
from .measures import Problem
from .primal import PrimalConfig, _check_domain, objective_f, objective_gradient, solve_primal
from .simplex_lp import (
    OPTIMAL,
    PsiEvaluation,
    psi_barycentric,
    psi_conical,
)

logger = logging.getLogger(__name__)

BARYCENTRIC = "barycentric"
CONICAL = "conical"
# bound on |gamma2 * (b - P'1)| per outer step; only reached when the inner
# problem diverges
_MAX_OUTER_EXPONENT = 50.0


@dataclass(frozen=True)
class DualConfig:
    """Settings of the nested scheme.

    ``K1`` outer wage steps of size ``gamma2``, each preceded by ``K2`` inner
    plan steps of size ``gamma1``. ``outer_tol`` optionally stops early once
    ``|b - P'1|_inf`` falls below it. The final dual value is certified by
    re-solving the inner problem from ``a b'`` for ``K2_final`` steps.
    """

    gamma1: float = 0.1
    gamma2: float = 0.05
    K1: int = 500
    K2: int = 50
    phi_init: str = "ones"
    outer_tol: float | None = None
    h_ceiling: float = 1e8
    K2_final: int = 2000
    inner_rtol: float = 1e-7

    def __post_init__(self):
        if not (self.gamma1 > 0 and self.gamma2 > 0):
            raise ValueError("stepsizes must be positive")
        if self.K1 < 1 or self.K2 < 1 or self.K2_final < 1:
            raise ValueError("iteration counts must be positive")
        if self.phi_init not in ("ones", "warm"):
            raise ValueError("phi_init must be 'ones' or 'warm'")


class WageFunction:
    """Wages ``phi`` on worker types and their convex envelope ``psi``.

    ``psi`` is the largest convex minorant of ``phi`` over the hull of the
    worker types (barycentric) or the largest convex positively homogeneous
    one over their cone (conical). Calling the object evaluates ``psi``.
    """

    def __init__(self, phi, worker_points, mode: str = BARYCENTRIC, psi_values=None):
        if mode not in (BARYCENTRIC, CONICAL):
            raise ValueError(f"mode must be {BARYCENTRIC!r} or {CONICAL!r}")
        self.phi = np.asarray(phi, dtype=float).copy()
        if np.any(self.phi < 0):
            raise ValueError("wages must be nonnegative")
        Y = np.asarray(worker_points, dtype=float)
        self.worker_points = Y[:, None] if Y.ndim == 1 else Y
        self.mode = mode
        self.psi_values = None if psi_values is None else np.asarray(psi_values, dtype=float)

    def evaluate(self, z) -> PsiEvaluation:
        solver = psi_barycentric if self.mode == BARYCENTRIC else psi_conical
        return solver(self.phi, self.worker_points, z)

    def __call__(self, z) -> float:
        return self.evaluate(z).value


def recover_psi(phi, worker_points, mode: str = BARYCENTRIC) -> WageFunction:
    """Build the wage envelope and tabulate it at every worker type."""
    wage = WageFunction(phi, worker_points, mode)
    vals = np.empty(len(wage.phi))
    for j, y in enumerate(wage.worker_points):
        ev = wage.evaluate(y)
        if ev.status != OPTIMAL:
            raise RuntimeError(f"envelope LP at worker type {j} ended with status {ev.status}")
        vals[j] = ev.value
    wage.psi_values = vals
    return wage


def h_value(phi, P, a, cost: CostModel) -> float:
    """Firms' profit ``f(P) - sum_ij P_ij phi_j``."""
    P = np.asarray(P, dtype=float)
    return objective_f(P, a, cost) - float(P.sum(axis=0) @ np.asarray(phi, dtype=float))


def h_gradient_P(phi, P, a, cost: CostModel) -> np.ndarray:
    return objective_gradient(P, a, cost) - np.asarray(phi, dtype=float)[None, :]


@dataclass
class InnerSolve:
    plan: np.ndarray
    h: float
    iterations: int
    gap_bound: float | None
    stationarity: float


@dataclass
class DualResult:
    wage: WageFunction
    dual_objective: float
    plan: np.ndarray
    outer_iterations: int
    inner: InnerSolve
    phi_source: str
    outer_residual: float
    events: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "dual_objective": self.dual_objective,
            "outer_iterations": self.outer_iterations,
            "phi_source": self.phi_source,
            "outer_residual": self.outer_residual,
            "inner_iterations": self.inner.iterations,
            "inner_gap_bound": self.inner.gap_bound,
            "inner_stationarity": self.inner.stationarity,
            "events": list(self.events),
        }


def _inner_step(logP, hgrad, gamma, a, problem):
    L = logP + gamma * hgrad
    if problem is Problem.WOT:
        L = log_project_first_marginal(L, a)
    return L


def _stationarity(P, hgrad, problem):
    """Sup-norm KKT residual of the inner problem at ``P``."""
    if problem is Problem.WOT:
        # on each row the gradient should be constant over the support
        rowmean = (P * hgrad).sum(axis=1) / P.sum(axis=1)
        return float(np.max(np.abs(P * (hgrad - rowmean[:, None]))))
    return float(np.max(np.abs(P * hgrad)))


def solve_inner(phi, a, b, cost: CostModel, problem, iters: int, gamma: float,
                rtol: float = 1e-7) -> InnerSolve:
    """Maximize ``h(phi, .)`` from ``a b'`` by monotone mirror ascent: the
    step is halved whenever it would decrease ``h`` and grown by 25% after
    every accepted step.

    For WOT the rows live on scaled simplices, so the Frank-Wolfe bound
    ``sum_i [a_i max_j grad_ij - <grad_i, P_i>]`` on the remaining gain is
    returned as ``gap_bound``. For WOTUK the feasible set is a cone and no
    finite bound of this kind exists.
    """
    problem = Problem.parse(problem)
    a = np.asarray(a, dtype=float)
    phi = np.asarray(phi, dtype=float)
    logP = np.log(a)[:, None] + np.log(np.asarray(b, dtype=float))[None, :]
    P = np.exp(logP)
    h = h_value(phi, P, a, cost)
    k = 0
    while k < iters:
        hgrad = h_gradient_P(phi, P, a, cost)
        if k % 10 == 0 and _stationarity(P, hgrad, problem) <= rtol * max(1.0, abs(h)):
            break
        while True:
            cand = _inner_step(logP, hgrad, gamma, a, problem)
            Pc = np.exp(cand)
            hc = h_value(phi, Pc, a, cost) if np.all(np.isfinite(Pc)) else -np.inf
            if hc >= h or gamma < 1e-12:
                break
            gamma *= 0.5
        if not hc >= h:
            break
        logP, P, h = cand, Pc, hc
        gamma *= 1.25
        k += 1
    hgrad = h_gradient_P(phi, P, a, cost)
    bound = None
    if problem is Problem.WOT:
        bound = float(np.sum(a * hgrad.max(axis=1)) - np.sum(P * hgrad))
    return InnerSolve(P, h, k, bound, _stationarity(P, hgrad, problem))


def warm_start_phi(a, b, cost: CostModel, problem, config: PrimalConfig | None = None):
    """Per-column marginal productivity at a primal solution,
    ``phi_j = sum_i P_ij G_ij / b_j``."""
    rep = solve_primal(a, b, cost, problem, config)
    G = objective_gradient(rep.plan, a, cost)
    phi = (rep.plan * G).sum(axis=0) / np.asarray(b, dtype=float)
    return np.maximum(phi, 1e-12)


def solve_dual(a, b, cost: CostModel, problem="wot", config: DualConfig | None = None,
               *, mode: str | None = None, primal_config: PrimalConfig | None = None) -> DualResult:
    """Run the nested mirror scheme and recover the wage envelope.

    The reported dual objective is ``<b, phi> + max_P h(phi, P)`` with the
    inner maximum re-solved from ``a b'``; it is evaluated at the last and at
    the averaged wage iterate and the smaller (tighter) value is kept.
    """
    config = config or DualConfig()
    problem = Problem.parse(problem)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_domain(cost, problem)
    mode = mode or (BARYCENTRIC if problem is Problem.WOT else CONICAL)
    events = []

    if config.phi_init == "warm":
        phi = warm_start_phi(a, b, cost, problem, primal_config)
    else:
        phi = np.ones(len(b))
    phi_sum = np.zeros_like(phi)

    logP = np.log(a)[:, None] + np.log(b)[None, :]
    P = np.exp(logP)
    k1 = 0
    residual = np.inf
    for k1 in range(1, config.K1 + 1):
        for _ in range(config.K2):
            logP = _inner_step(logP, h_gradient_P(phi, P, a, cost), config.gamma1, a, problem)
            P = np.exp(logP)
            if not np.all(np.isfinite(P)) or h_value(phi, P, a, cost) > config.h_ceiling:
                events.append(f"outer {k1}: inner objective exceeded ceiling {config.h_ceiling:g}")
                logger.info(events[-1])
                logP = np.clip(np.nan_to_num(logP, nan=0.0, posinf=_MAX_OUTER_EXPONENT), None,
                               _MAX_OUTER_EXPONENT)
                P = np.exp(logP)
                break
        excess = b - P.sum(axis=0)
        residual = float(np.max(np.abs(excess)))
        step = np.clip(-config.gamma2 * excess, -_MAX_OUTER_EXPONENT, _MAX_OUTER_EXPONENT)
        phi = phi * np.exp(step)
        phi_sum += phi
        if config.outer_tol is not None and residual <= config.outer_tol:
            break
    phi_avg = phi_sum / k1

    best = None
    for source, cand in (("last", phi), ("average", phi_avg)):
        inner = solve_inner(cand, a, b, cost, problem, config.K2_final, config.gamma1,
                            config.inner_rtol)
        value = float(b @ cand) + inner.h
        if best is None or value < best[0]:
            best = (value, source, cand, inner)
    value, source, phi_best, inner = best
    wage = recover_psi(phi_best, cost_worker_points(cost, len(b)), mode)
    return DualResult(wage, value, inner.plan, k1, inner, source, residual, events)


def cost_worker_points(cost: CostModel, m: int) -> np.ndarray:
    """Worker types of an aggregate cost, or integer positions otherwise."""
    Y = getattr(cost, "worker_points", None)
    if Y is None:
        return np.arange(m, dtype=float)[:, None]
    return Y
