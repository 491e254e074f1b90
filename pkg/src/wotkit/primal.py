"""Mirror ascent on the matching plan with a certified optimality gap.

The plan is kept in log form between iterations so multiplicative steps
never underflow to exact zeros; projections run in the log domain whenever
the kernel's dynamic range requires it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bregman import (
    SinkhornConfig,
    log_project_second_marginal,
    scale_log_kernel,
    sinkhorn_eot,
)
from .costs import CONE, SIMPLEX, CostModel
from .measures import Problem, feasibility_residuals
from .simplex_lp import exact_ot

logger = logging.getLogger(__name__)

EXACT_LP = "exact_lp"
ENTROPIC_BOUND = "entropic_bound"
_MAX_EXP = 700.0


@dataclass(frozen=True)
class PrimalConfig:
    """Mirror-ascent settings.

    ``gamma`` is halved whenever the objective drops between two gap checks.
    ``epsilon`` is the relative gap tolerance of the stopping rule.
    """

    gamma: float = 0.1
    epsilon: float = 1e-3
    max_iters: int = 10_000
    gap_check_every: int = 10
    gap_method: str = EXACT_LP
    backtracking: bool = True
    sinkhorn_tol: float = 1e-9
    sinkhorn_max_iters: int = 100_000
    entropic_gap_eps: float = 1e-2

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 0 or self.gap_check_every < 1:
            raise ValueError("max_iters must be >= 0 and gap_check_every >= 1")
        if self.gap_method not in (EXACT_LP, ENTROPIC_BOUND):
            raise ValueError(f"gap_method must be {EXACT_LP!r} or {ENTROPIC_BOUND!r}")


@dataclass
class SolveReport:
    plan: np.ndarray
    objective: float
    certified_gap_upper: float
    iterations: int
    row_residual: float
    col_residual: float
    converged: bool
    problem: str
    gamma_final: float
    relative_stopping: bool = True
    finite_difference_gradient: bool = False
    trace: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "problem": self.problem,
            "objective": self.objective,
            "certified_gap_upper": self.certified_gap_upper,
            "iterations": self.iterations,
            "row_residual": self.row_residual,
            "col_residual": self.col_residual,
            "converged": self.converged,
            "gamma_final": self.gamma_final,
            "relative_stopping": self.relative_stopping,
            "finite_difference_gradient": self.finite_difference_gradient,
            "notes": list(self.notes),
        }


def objective_f(P, a, cost: CostModel) -> float:
    """Total output ``sum_i a_i F(x_i, P_i / a_i)``."""
    a = np.asarray(a, dtype=float)
    P = np.asarray(P, dtype=float)
    return float(a @ cost.values(P / a[:, None]))


def objective_gradient(P, a, cost: CostModel) -> np.ndarray:
    """``df/dP_ij = [grad_p F(x_i, P_i / a_i)]_j``; the weights ``a`` cancel."""
    a = np.asarray(a, dtype=float)
    return cost.gradients(np.asarray(P, dtype=float) / a[:, None])


def mirror_step(P, G, gamma) -> tuple[np.ndarray, float]:
    """Multiplicative step ``P * exp(gamma G)``.

    Returns ``(M, log_scale)`` with the exact step equal to
    ``M * exp(log_scale)``. ``log_scale`` is 0 unless the step would
    overflow, in which case the whole matrix is rescaled; both KL projections
    are invariant to that rescaling.
    """
    P = np.asarray(P, dtype=float)
    if np.any(P <= 0):
        raise ValueError("mirror step needs a strictly positive plan")
    L = np.log(P) + gamma * np.asarray(G, dtype=float)
    top = float(L.max())
    if top <= _MAX_EXP:
        return P * np.exp(gamma * np.asarray(G, dtype=float)), 0.0
    logger.info("mirror step rescaled by exp(-%.1f) to avoid overflow", top)
    return np.exp(L - top), top


def ugap(P, G, a, b, problem="wot", gap_method: str = EXACT_LP, entropic_eps: float = 1e-2):
    """Linearized gap bound ``sup_Q <G, Q - P>`` and a maximizing witness.

    For WOT the supremum is a transport problem with gain ``G``, solved
    exactly or bounded through the entropic dual. For WOTUK every column
    sends its whole mass to the firm with the largest gradient (ties to the
    smallest firm index).
    """
    P = np.asarray(P, dtype=float)
    G = np.asarray(G, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(G)):
        raise ValueError("gradient must be finite")
    lin = float(np.sum(G * P))
    if Problem.parse(problem) is Problem.WOTUK:
        best = np.argmax(G, axis=0)
        Q = np.zeros_like(G)
        Q[best, np.arange(G.shape[1])] = b
        upper = float(b @ G[best, np.arange(G.shape[1])]) - lin
    elif gap_method == EXACT_LP:
        value, Q = exact_ot(G, a, b)
        upper = value - lin
    elif gap_method == ENTROPIC_BOUND:
        res = sinkhorn_eot(G, a, b, SinkhornConfig(epsilon=entropic_eps, marginal_tol=1e-9))
        Q = res.plan
        upper = res.dual_value + entropic_eps * np.log(min(len(a), len(b))) - lin
    else:
        raise ValueError(f"unknown gap method {gap_method!r}")
    return max(upper, 0.0), Q


def _initial_log_plan(a, b):
    return np.log(a)[:, None] + np.log(b)[None, :]


class _Projector:
    def __init__(self, a, b, problem, config: PrimalConfig):
        self.a, self.b = a, b
        self.problem = problem
        self.config = config
        self.failures = 0

    def __call__(self, L):
        if self.problem is Problem.WOTUK:
            return log_project_second_marginal(L, self.b)
        res = scale_log_kernel(L, self.a, self.b, self.config.sinkhorn_tol,
                               self.config.sinkhorn_max_iters)
        if not res.converged:
            self.failures += 1
        return res.log_plan


def _check_domain(cost: CostModel, problem: Problem):
    expected = SIMPLEX if problem is Problem.WOT else CONE
    if cost.domain != expected:
        raise ValueError(
            f"{problem.value} needs a cost with domain {expected!r}, got {cost.domain!r}"
        )


def solve_primal(a, b, cost: CostModel, problem="wot", config: PrimalConfig | None = None,
                 *, check_domain: bool = True) -> SolveReport:
    """Mirror ascent from the product plan ``a b'`` until the certified gap
    satisfies ``Ugap(P) <= epsilon f(P)`` or ``max_iters`` is reached.

    When the objective is not positive the test falls back to the absolute
    gap ``Ugap(P) <= epsilon``. On non-convergence the checked iterate with
    the best objective is returned with its own certified gap.
    """
    config = config or PrimalConfig()
    problem = Problem.parse(problem)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if (cost.n_firms, cost.n_workers) != (len(a), len(b)):
        raise ValueError("cost model size does not match the marginals")
    if check_domain:
        _check_domain(cost, problem)
    project = _Projector(a, b, problem, config)

    logP = _initial_log_plan(a, b)
    P = np.exp(logP)
    gamma = config.gamma
    trace = []
    notes = []
    prev_f = None
    best = None
    converged = False
    relative = True
    k = 0
    while True:
        G = objective_gradient(P, a, cost)
        last = k >= config.max_iters
        if k % config.gap_check_every == 0 or last:
            f = objective_f(P, a, cost)
            gap, _ = ugap(P, G, a, b, problem, config.gap_method, config.entropic_gap_eps)
            trace.append((k, f, gap))
            relative = f > 0
            if best is None or f > best[2]:
                best = (k, P, f, gap, relative)
            if gap <= config.epsilon * (f if relative else 1.0):
                converged = True
                best = (k, P, f, gap, relative)
                break
            if config.backtracking and prev_f is not None and f < prev_f - 1e-12 * abs(prev_f):
                gamma *= 0.5
                logger.debug("objective decreased at iteration %d, gamma -> %g", k, gamma)
            prev_f = f
        if last:
            break
        logP = project(logP + gamma * G)
        P = np.exp(logP)
        k += 1

    k_best, P, f, gap, relative = best
    if not relative:
        notes.append("objective not positive: absolute gap test used")
    if project.failures:
        notes.append(f"{project.failures} Sinkhorn projections hit the iteration cap")
    if not converged:
        notes.append(f"max_iters reached; returning iterate {k_best} with the best objective")
    row_res, col_res = feasibility_residuals(P, a, b, problem)
    return SolveReport(
        plan=P,
        objective=f,
        certified_gap_upper=gap,
        iterations=k,
        row_residual=row_res,
        col_residual=col_res,
        converged=converged,
        problem=problem.value,
        gamma_final=gamma,
        relative_stopping=relative,
        finite_difference_gradient=not cost.analytic_gradient,
        trace=trace,
        notes=notes,
    )
