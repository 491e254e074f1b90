"""Dense two-phase simplex, exact transport LP and wage-envelope LPs.

The tableau solver is meant for desk-scale problems (tens of thousands of
variables at most). Anti-cycling is guaranteed by Bland's rule: the default
``"hybrid"`` pivoting uses Dantzig's largest-reduced-cost rule after a
nondegenerate pivot and Bland's smallest-index rule after a degenerate one,
so every run of degenerate pivots is finite.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

PIVOT_TOL = 1e-9
COST_TOL = 1e-10
FEAS_TOL = 1e-9


@dataclass
class LinearProgram:
    """``min (or max) c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq``.

    Variables are nonnegative unless flagged in ``free``.
    """

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    free: np.ndarray | None = None
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        k = len(self.c)
        self.A_ub, self.b_ub = _pair(self.A_ub, self.b_ub, k, "ub")
        self.A_eq, self.b_eq = _pair(self.A_eq, self.b_eq, k, "eq")
        self.free = (np.zeros(k, dtype=bool) if self.free is None
                     else np.asarray(self.free, dtype=bool).ravel())
        if len(self.free) != k:
            raise ValueError("free mask must have one entry per variable")
        for arr in (self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP coefficients must be finite")

    @property
    def n_vars(self) -> int:
        return len(self.c)


def _pair(A, b, k, name):
    if A is None:
        if b is not None and len(b):
            raise ValueError(f"b_{name} given without A_{name}")
        return np.zeros((0, k)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape != (len(b), k):
        raise ValueError(f"A_{name} has shape {A.shape}, expected {(len(b), k)}")
    return A, b


@dataclass
class LPResult:
    """Outcome of :func:`lp_solve`.

    ``duals_ub`` / ``duals_eq`` are the sensitivities of the optimal value to
    the right-hand sides, so at optimality
    ``value = b_ub @ duals_ub + b_eq @ duals_eq``.
    """

    status: str
    x: np.ndarray | None = None
    value: float = float("nan")
    duals_ub: np.ndarray | None = None
    duals_eq: np.ndarray | None = None
    pivots: int = 0
    slackness_residual: float = float("nan")
    basis: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Standard-form tableau ``[A | rhs]`` with the reduced-cost row last."""

    def __init__(self, T, basis):
        self.T = np.ascontiguousarray(T, dtype=float)
        self.basis = np.asarray(basis, dtype=np.int64)
        self.pivots = 0

    @property
    def n_rows(self):
        return self.T.shape[0] - 1

    def run(self, rule, max_pivots):
        T = self.T
        last_degenerate = False
        while True:
            d = T[-1, :-1]
            neg = d < -COST_TOL
            if not neg.any():
                return OPTIMAL
            if self.pivots >= max_pivots:
                return ITERATION_LIMIT
            if rule == "bland" or (rule == "hybrid" and last_degenerate):
                col = int(np.argmax(neg))
            else:
                col = int(np.argmin(d))
            row = kernels.ratio_test(T, col, self.basis, self.n_rows, PIVOT_TOL)
            if row < 0:
                return UNBOUNDED
            last_degenerate = T[row, -1] <= FEAS_TOL
            kernels.pivot(T, row, col)
            self.basis[row] = col
            self.pivots += 1


def lp_solve(prob: LinearProgram, rule: str = "hybrid", max_pivots: int = 200_000) -> LPResult:
    """Two-phase dense simplex. ``rule`` is ``"hybrid"``, ``"bland"`` or
    ``"dantzig"``; the last has no anti-cycling guarantee."""
    if rule not in ("hybrid", "bland", "dantzig"):
        raise ValueError(f"unknown pivot rule {rule!r}")
    k = prob.n_vars
    free_idx = np.nonzero(prob.free)[0]
    # columns: x+ (k), x- for free vars, slacks for ub rows
    n_ub, n_eq = len(prob.b_ub), len(prob.b_eq)
    A = np.vstack([prob.A_ub, prob.A_eq])
    rhs = np.concatenate([prob.b_ub, prob.b_eq])
    A = np.hstack([A, -A[:, free_idx], np.vstack([np.eye(n_ub), np.zeros((n_eq, n_ub))])])
    c = np.concatenate([prob.c, -prob.c[free_idx], np.zeros(n_ub)])
    if prob.maximize:
        c = -c
    n_struct = A.shape[1]
    sign = np.where(rhs < 0, -1.0, 1.0)
    A = A * sign[:, None]
    rhs = rhs * sign
    n_rows = len(rhs)

    basis = np.full(n_rows, -1, dtype=np.int64)
    for r in range(n_ub):
        if sign[r] > 0:
            basis[r] = k + len(free_idx) + r
    need_art = np.nonzero(basis < 0)[0]
    n_art = len(need_art)
    T = np.zeros((n_rows + 1, n_struct + n_art + 1))
    T[:n_rows, :n_struct] = A
    T[:n_rows, -1] = rhs
    for t, r in enumerate(need_art):
        T[r, n_struct + t] = 1.0
        basis[r] = n_struct + t

    tab = _Tableau(T, basis)
    if n_art:
        # phase 1: minimise the sum of artificials
        tab.T[-1, :] = 0.0
        tab.T[-1, n_struct:n_struct + n_art] = 1.0
        for r in need_art:
            tab.T[-1] -= tab.T[r]
        status = tab.run(rule, max_pivots)
        if status == ITERATION_LIMIT:
            return LPResult(ITERATION_LIMIT, pivots=tab.pivots)
        if -tab.T[-1, -1] > FEAS_TOL * max(1.0, np.abs(rhs).max(initial=0.0)):
            return LPResult(INFEASIBLE, pivots=tab.pivots)
        _drive_out_artificials(tab, n_struct)
        tab.T = np.ascontiguousarray(np.delete(tab.T, np.s_[n_struct:n_struct + n_art], axis=1))

    # phase 2
    T = tab.T
    T[-1, :] = 0.0
    T[-1, :n_struct] = c
    for r, bv in enumerate(tab.basis):
        if c[bv] != 0.0:
            T[-1] -= c[bv] * T[r]
    status = tab.run(rule, max_pivots)
    if status != OPTIMAL:
        return LPResult(status, pivots=tab.pivots)

    xs = np.zeros(n_struct)
    xs[tab.basis] = tab.T[:-1, -1]
    xs = np.maximum(xs, 0.0)
    x = xs[:k].copy()
    x[free_idx] -= xs[k:k + len(free_idx)]
    value = float(prob.c @ x)

    # duals from B' y = c_B on the sign-normalised rows
    B = A[:, tab.basis]
    y, *_ = np.linalg.lstsq(B.T, c[tab.basis], rcond=None)
    y = y * sign
    if prob.maximize:
        y = -y
    duals_ub, duals_eq = y[:n_ub], y[n_ub:]
    res = _slackness(prob, x, duals_ub, duals_eq)
    return LPResult(OPTIMAL, x, value, duals_ub, duals_eq, tab.pivots, res, tab.basis.copy())


def _drive_out_artificials(tab: _Tableau, n_struct: int):
    r = 0
    while r < tab.n_rows:
        if tab.basis[r] >= n_struct:
            row = tab.T[r, :n_struct]
            cand = np.nonzero(np.abs(row) > PIVOT_TOL)[0]
            if cand.size:
                col = int(cand[0])
                kernels.pivot(tab.T, r, col)
                tab.basis[r] = col
                tab.pivots += 1
            else:
                # redundant constraint
                tab.T = np.ascontiguousarray(np.delete(tab.T, r, axis=0))
                tab.basis = np.delete(tab.basis, r)
                continue
        r += 1


def _slackness(prob, x, y_ub, y_eq):
    """Largest violation of complementary slackness at ``(x, y)``."""
    sgn = -1.0 if prob.maximize else 1.0
    reduced = sgn * (prob.c - prob.A_ub.T @ y_ub - prob.A_eq.T @ y_eq)
    slack = prob.b_ub - prob.A_ub @ x
    r1 = np.abs(reduced * x).max(initial=0.0)
    r2 = np.abs(y_ub * slack).max(initial=0.0)
    return float(max(r1, r2))


# -- exact optimal transport ------------------------------------------------

def transport_lp(C, a, b) -> LinearProgram:
    """Kantorovich LP ``max <C, P>`` over couplings of ``(a, b)``;
    variables are ``P`` flattened row-major."""
    C = np.asarray(C, dtype=float)
    n, m = C.shape
    A_eq = np.zeros((n + m, n * m))
    for i in range(n):
        A_eq[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        A_eq[n + j, j::m] = 1.0
    return LinearProgram(C.ravel(), A_eq=A_eq, b_eq=np.concatenate([a, b]), maximize=True)


def exact_ot(C, a, b, rule: str = "hybrid") -> tuple[float, np.ndarray]:
    """Optimal value and vertex plan of ``max_{P in Pi(a, b)} <C, P>``."""
    C = np.asarray(C, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if C.shape != (len(a), len(b)):
        raise ValueError(f"cost shape {C.shape} does not match marginals ({len(a)}, {len(b)})")
    res = lp_solve(transport_lp(C, a, b), rule=rule)
    if not res.optimal:
        raise RuntimeError(f"transport LP ended with status {res.status}")
    P = res.x.reshape(C.shape)
    return float(np.sum(C * P)), P


# -- wage envelopes -----------------------------------------------------------

@dataclass
class PsiEvaluation:
    """Envelope value ``psi(z)`` with its LP multipliers.

    ``lam`` is the slope of ``psi`` at ``z`` (its gradient when the optimal
    multipliers are unique); ``mu`` is None in conical mode. ``weights`` is
    the optimal mixture ``p`` of worker types. ``status`` is ``"infeasible"`` when ``z`` lies
    outside the hull (barycentric) or cone (conical) of the worker types.
    """

    value: float
    lam: np.ndarray | None
    mu: float | None
    status: str
    weights: np.ndarray | None = None

    @property
    def feasible(self) -> bool:
        return self.status == OPTIMAL


def _psi_inputs(phi, worker_points, z):
    phi = np.asarray(phi, dtype=float).ravel()
    Y = np.asarray(worker_points, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if len(phi) != len(Y) or Y.shape[1] != len(z):
        raise ValueError("phi, worker_points and z have inconsistent sizes")
    if np.any(phi < 0):
        raise ValueError("wages phi must be nonnegative")
    return phi, Y, z


def psi_barycentric(phi, worker_points, z) -> PsiEvaluation:
    """Largest convex minorant of ``phi`` over ``conv(Y)`` at ``z``, via
    ``max <lam, z> + mu  s.t.  <lam, y_j> + mu <= phi_j``."""
    phi, Y, z = _psi_inputs(phi, worker_points, z)
    q = Y.shape[1]
    A = np.hstack([Y, np.ones((len(Y), 1))])
    prob = LinearProgram(np.append(z, 1.0), A_ub=A, b_ub=phi,
                         free=np.ones(q + 1, dtype=bool), maximize=True)
    res = lp_solve(prob, rule="bland")
    if res.status == UNBOUNDED:
        return PsiEvaluation(float("inf"), None, None, INFEASIBLE)
    if not res.optimal:
        raise RuntimeError(f"envelope LP ended with status {res.status}")
    return PsiEvaluation(res.value, res.x[:q], float(res.x[q]), OPTIMAL, np.maximum(res.duals_ub, 0.0))


def psi_conical(phi, worker_points, z) -> PsiEvaluation:
    """Largest convex positively homogeneous minorant of ``phi`` at ``z``,
    via ``max <lam, z>  s.t.  <lam, y_j> <= phi_j``."""
    phi, Y, z = _psi_inputs(phi, worker_points, z)
    q = Y.shape[1]
    prob = LinearProgram(z, A_ub=Y, b_ub=phi, free=np.ones(q, dtype=bool), maximize=True)
    res = lp_solve(prob, rule="bland")
    if res.status == UNBOUNDED:
        return PsiEvaluation(float("inf"), None, None, INFEASIBLE)
    if not res.optimal:
        raise RuntimeError(f"envelope LP ended with status {res.status}")
    return PsiEvaluation(res.value, res.x, None, OPTIMAL, np.maximum(res.duals_ub, 0.0))


def psi_barycentric_primal(phi, worker_points, z) -> PsiEvaluation:
    """Same envelope from the mixture side:
    ``min <p, phi>  s.t.  p >= 0, sum p = 1, sum p_j y_j = z``."""
    phi, Y, z = _psi_inputs(phi, worker_points, z)
    A_eq = np.vstack([np.ones(len(Y)), Y.T])
    res = lp_solve(LinearProgram(phi, A_eq=A_eq, b_eq=np.append(1.0, z)), rule="bland")
    if res.status == INFEASIBLE:
        return PsiEvaluation(float("inf"), None, None, INFEASIBLE)
    if not res.optimal:
        raise RuntimeError(f"envelope LP ended with status {res.status}")
    return PsiEvaluation(res.value, res.duals_eq[1:], float(res.duals_eq[0]), OPTIMAL, res.x)


def psi_conical_primal(phi, worker_points, z) -> PsiEvaluation:
    """``min <p, phi>  s.t.  p >= 0, sum p_j y_j = z``."""
    phi, Y, z = _psi_inputs(phi, worker_points, z)
    res = lp_solve(LinearProgram(phi, A_eq=Y.T, b_eq=z), rule="bland")
    if res.status == INFEASIBLE:
        return PsiEvaluation(float("inf"), None, None, INFEASIBLE)
    if not res.optimal:
        raise RuntimeError(f"envelope LP ended with status {res.status}")
    return PsiEvaluation(res.value, res.duals_eq, None, OPTIMAL, res.x)
