"""Discrete measures, couplings and marginal arithmetic."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

WEIGHT_TOL = 1e-12


class Problem(str, Enum):
    """Constraint set of a matching problem.

    ``WOT`` constrains both marginals of the plan. ``WOTUK`` only constrains
    the column (worker) marginal; row masses become firm sizes.
    """

    WOT = "wot"
    WOTUK = "wotuk"

    @classmethod
    def parse(cls, value: "Problem | str") -> "Problem":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weighted point cloud ``sum_k w_k delta_{x_k}``.

    Weights are validated (finite, strictly positive) and divided by their
    sum once, so raw CSV weights need not be normalized.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.array(self.weights, dtype=float).ravel()
        if pts.ndim != 2:
            raise ValueError("points must be a (k, d) array")
        if len(w) < 1 or len(w) != pts.shape[0]:
            raise ValueError(
                f"need one weight per point, got {len(w)} weights for {pts.shape[0]} points"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(pts))):
            raise ValueError("points and weights must be finite")
        if np.any(w <= 0):
            raise ValueError("zero or negative weights are not allowed")
        w = w / w.sum()
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights could not be normalized to 1 within 1e-12")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = np.asarray(points, dtype=float)
        return cls(pts, np.ones(pts.shape[0]))


@dataclass(frozen=True, eq=False)
class Coupling:
    """Nonnegative ``n x m`` matching plan between firm and worker types.

    Rows follow the order of ``row_points``, columns the order of
    ``col_points``. Feasibility is checked per problem with
    :func:`feasibility_residuals`, not here.
    """

    matrix: np.ndarray
    row_points: np.ndarray | None = None
    col_points: np.ndarray | None = None

    def __post_init__(self):
        P = np.array(self.matrix, dtype=float)
        if P.ndim != 2:
            raise ValueError("coupling matrix must be 2-D")
        if np.any(P < 0) or not np.all(np.isfinite(P)):
            raise ValueError("coupling entries must be finite and nonnegative")
        if self.row_points is not None and len(self.row_points) != P.shape[0]:
            raise ValueError("row_points length does not match matrix rows")
        if self.col_points is not None and len(self.col_points) != P.shape[1]:
            raise ValueError("col_points length does not match matrix columns")
        P.setflags(write=False)
        object.__setattr__(self, "matrix", P)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def _as_matrix(P) -> np.ndarray:
    if isinstance(P, Coupling):
        return P.matrix
    return np.asarray(P, dtype=float)


def row_sums(P) -> np.ndarray:
    return _as_matrix(P).sum(axis=1)


def col_sums(P) -> np.ndarray:
    return _as_matrix(P).sum(axis=0)


def feasibility_residuals(P, a, b, problem="wot") -> tuple[float, float]:
    """Sup-norm marginal violations ``(rows, cols)`` of ``P``.

    For WOTUK the first marginal is free, so the row residual is 0.
    """
    M = _as_matrix(P)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if M.shape != (len(a), len(b)):
        raise ValueError(f"plan shape {M.shape} does not match marginals ({len(a)}, {len(b)})")
    col = float(np.max(np.abs(M.sum(axis=0) - b)))
    if Problem.parse(problem) is Problem.WOTUK:
        return 0.0, col
    return float(np.max(np.abs(M.sum(axis=1) - a))), col


def firm_sizes(P, a) -> np.ndarray:
    """Employees per unit of firm mass, ``N_i = (P 1)_i / a_i``."""
    return row_sums(P) / np.asarray(a, dtype=float)


def product_coupling(a, b) -> np.ndarray:
    return np.outer(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
