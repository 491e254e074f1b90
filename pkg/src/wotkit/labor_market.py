"""Worker-firm economies with two skills, and the metrics read off solutions.

Firms are ``(z, alpha1, alpha2)`` with productivity ``z`` and skill
intensities summing to one. Workers sit on the unit quarter circle,
``y = (cos theta, sin theta)``, so the skill profile ``theta`` alone fixes
the type: 0 and pi/2 are specialists, pi/4 is the generalist.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dual import WageFunction
from .measures import DiscreteMeasure
from .simplex_lp import OPTIMAL

logger = logging.getLogger(__name__)

SCENARIO_A = "A"
SCENARIO_B = "B"
UNIFORM = "uniform"


@dataclass(frozen=True)
class FirmGrid:
    """``n`` firm types with ``alpha2 = linspace(0, 1, n)`` and equal weights.

    Productivities are all ``z_range[0]`` when the range is degenerate and
    otherwise drawn uniformly from it with ``seed``.
    """

    n: int
    z_range: tuple[float, float] = (1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two firm types")
        lo, hi = self.z_range
        if not (0 < lo <= hi):
            raise ValueError("z_range must satisfy 0 < low <= high")

    @property
    def alpha2(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)

    def z(self) -> np.ndarray:
        lo, hi = self.z_range
        if lo == hi:
            return np.full(self.n, float(lo))
        return np.random.default_rng(self.seed).uniform(lo, hi, self.n)

    def measure(self) -> DiscreteMeasure:
        a2 = self.alpha2
        pts = np.column_stack([self.z(), 1.0 - a2, a2])
        return DiscreteMeasure(pts, np.full(self.n, 1.0 / self.n))


def profile_weights(theta, profile: str, kappa: float) -> np.ndarray:
    """Unnormalized worker weights as a function of the skill profile.

    Scenario A grows linearly towards the specialists,
    ``1 + kappa |theta - pi/4| / (pi/4)``; scenario B grows towards the
    generalist, ``1 + kappa (1 - |theta - pi/4| / (pi/4))``.
    """
    dist = np.abs(np.asarray(theta, dtype=float) - np.pi / 4) / (np.pi / 4)
    if profile == SCENARIO_A:
        return 1.0 + kappa * dist
    if profile == SCENARIO_B:
        return 1.0 + kappa * (1.0 - dist)
    if profile == UNIFORM:
        return np.ones_like(dist)
    raise ValueError(f"unknown worker profile {profile!r}")


@dataclass(frozen=True)
class WorkerArc:
    m: int
    profile: str = UNIFORM
    kappa: float = 2.0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need at least two worker types")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")

    @property
    def theta(self) -> np.ndarray:
        return np.linspace(0.0, np.pi / 2, self.m)

    def points(self) -> np.ndarray:
        th = self.theta
        pts = np.column_stack([np.cos(th), np.sin(th)])
        # exact specialists at both ends
        pts[0] = (1.0, 0.0)
        pts[-1] = (0.0, 1.0)
        return pts

    def measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.points(), profile_weights(self.theta, self.profile, self.kappa))


def make_scenario(kind: str, n: int, m: int, kappa: float = 2.0, z_range=(1.0, 1.0), seed: int = 0):
    """Firms and workers of scenario ``"A"`` (many specialists) or ``"B"``
    (many generalists). Returns ``(firms, workers)`` measures."""
    kind = str(kind).upper()
    if kind not in (SCENARIO_A, SCENARIO_B):
        raise ValueError("scenario kind must be 'A' or 'B'")
    if n < 2 or m < 2:
        raise ValueError("need at least two firm and two worker types")
    firms = FirmGrid(n, tuple(z_range), seed).measure()
    workers = WorkerArc(m, kind, kappa).measure()
    return firms, workers


def skill_profile(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.arctan2(pts[:, 1], pts[:, 0])


def alpha_to_theta(plan, firms: DiscreteMeasure, workers: DiscreteMeasure, min_mass: float = 1e-14):
    """Skill profile of each firm's aggregate workforce.

    Returns ``(alpha2, theta_bar)`` for firms with positive row mass; the
    angle is the same for the barycentric and the conical aggregate.
    """
    P = np.asarray(plan, dtype=float)
    mass = P.sum(axis=1)
    keep = mass > min_mass
    if not keep.all():
        logger.info("skipping %d firm types with no employees", int((~keep).sum()))
    agg = P[keep] @ workers.points
    return firms.points[keep, 2].copy(), skill_profile(agg)


def wage_surface(wage: WageFunction, res: int = 64, radius: float = 1.0):
    """``psi`` on a ``res x res`` grid over ``[0, radius]^2``.

    Returns ``(x1, x2, psi, feasible)`` as flat arrays in row-major grid
    order; infeasible cells carry ``nan``.
    """
    ticks = np.linspace(0.0, radius, res)
    X1, X2 = np.meshgrid(ticks, ticks, indexing="ij")
    x1, x2 = X1.ravel(), X2.ravel()
    psi = np.full(x1.shape, np.nan)
    feasible = np.zeros(x1.shape, dtype=bool)
    for k, z in enumerate(zip(x1, x2)):
        ev = wage.evaluate(np.array(z))
        if ev.status == OPTIMAL:
            psi[k] = ev.value
            feasible[k] = True
    return x1, x2, psi, feasible


def convexity_gap(wage: WageFunction, segments) -> float:
    """Largest midpoint excess ``(psi(u) + psi(v))/2 - psi((u+v)/2)`` over
    the ``(u, v)`` pairs; pairs with an infeasible point are skipped."""
    worst = 0.0
    seen = False
    for u, v in segments:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        evs = [wage.evaluate(p) for p in (u, v, 0.5 * (u + v))]
        if any(ev.status != OPTIMAL for ev in evs):
            continue
        gap = 0.5 * (evs[0].value + evs[1].value) - evs[2].value
        worst = gap if not seen else max(worst, gap)
        seen = True
    if not seen:
        raise ValueError("no feasible segment to measure")
    return float(worst)


def quarter_disc_segments(radius: float = 1.0, count: int = 8):
    """Chords between arc points at ``theta`` and ``pi/2 - theta`` for
    ``count`` angles in ``[0, pi/4)``, plus the same chords at half radius."""
    out = []
    for r in (radius, 0.5 * radius):
        for th in np.linspace(0.0, np.pi / 4, count, endpoint=False):
            u = r * np.array([np.cos(th), np.sin(th)])
            v = r * np.array([np.sin(th), np.cos(th)])
            out.append((u, v))
    return out


def generalist_index(alpha2) -> int:
    """Firm with ``alpha2`` nearest 0.5; exact ties (even grids) go to the
    smaller index."""
    dist = np.round(np.abs(np.asarray(alpha2, dtype=float) - 0.5), 12)
    return int(np.argmin(dist))


def economy_summary(firm_sizes, alpha2):
    """Sizes of the two specialist firms and of the most generalist one."""
    alpha2 = np.asarray(alpha2)
    g = generalist_index(alpha2)
    return {
        "size_alpha2_0": float(firm_sizes[int(np.argmin(alpha2))]),
        "size_alpha2_1": float(firm_sizes[int(np.argmax(alpha2))]),
        "size_generalist": float(firm_sizes[g]),
        "generalist_alpha2": float(alpha2[g]),
    }
