"""Discrete weak optimal transport for worker-firm matching.

Primal mirror ascent and nested dual mirror descent for the WOT and WOTUK
problems, KL projections, an exact simplex LP for certificates and wage
envelopes, and the two-skill labor-market experiments.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .bregman import EotResult, SinkhornConfig, kl_project_couplings, kl_project_second_marginal, sinkhorn_eot
from .costs import (
    CONE,
    SIMPLEX,
    AggregateCost,
    CesParams,
    CostModel,
    FunctionCost,
    LinearCost,
    barycentric_cost,
    ces_cost,
    ces_matrix,
    conical_cost,
    linear_cost,
)
from .dual import DualConfig, DualResult, WageFunction, recover_psi, solve_dual
from .labor_market import alpha_to_theta, convexity_gap, make_scenario, wage_surface
from .measures import Coupling, DiscreteMeasure, Problem, feasibility_residuals, firm_sizes
from .primal import PrimalConfig, SolveReport, objective_f, objective_gradient, solve_primal, ugap
from .simplex_lp import LinearProgram, LPResult, exact_ot, lp_solve, psi_barycentric, psi_conical

__all__ = [
    "BACKEND",
    "CONE",
    "SIMPLEX",
    "AggregateCost",
    "CesParams",
    "CostModel",
    "Coupling",
    "DiscreteMeasure",
    "DualConfig",
    "DualResult",
    "EotResult",
    "FunctionCost",
    "LPResult",
    "LinearCost",
    "LinearProgram",
    "PrimalConfig",
    "Problem",
    "SinkhornConfig",
    "SolveReport",
    "WageFunction",
    "alpha_to_theta",
    "barycentric_cost",
    "ces_cost",
    "ces_matrix",
    "conical_cost",
    "convexity_gap",
    "exact_ot",
    "feasibility_residuals",
    "firm_sizes",
    "kl_project_couplings",
    "kl_project_second_marginal",
    "linear_cost",
    "lp_solve",
    "make_scenario",
    "objective_f",
    "objective_gradient",
    "psi_barycentric",
    "psi_conical",
    "recover_psi",
    "sinkhorn_eot",
    "solve_dual",
    "solve_primal",
    "ugap",
    "wage_surface",
]
