import numpy as np
import pytest

from conftest import random_simplex, slsqp_kl_oracle
from wotkit.bregman import (
    SinkhornConfig,
    kl_divergence,
    kl_project_couplings,
    kl_project_first_marginal,
    kl_project_second_marginal,
    scale_log_kernel,
    sinkhorn_eot,
)


def northwest_corner(a, b):
    a, b = a.copy(), b.copy()
    P = np.zeros((len(a), len(b)))
    i = j = 0
    while i < len(a) and j < len(b):
        t = min(a[i], b[j])
        P[i, j] = t
        a[i] -= t
        b[j] -= t
        if a[i] <= 1e-15:
            i += 1
        else:
            j += 1
    return P


def random_feasible(rng, a, b):
    """Random point of the transport polytope: a mixture of permuted
    northwest-corner vertices and the product coupling."""
    pr, pc = rng.permutation(len(a)), rng.permutation(len(b))
    V = np.zeros((len(a), len(b)))
    V[np.ix_(pr, pc)] = northwest_corner(a[pr], b[pc])
    t = rng.uniform()
    return t * V + (1 - t) * np.outer(a, b)


def test_projection_of_feasible_point_is_identity(rng):
    a, b = random_simplex(rng, 3), random_simplex(rng, 4)
    np.testing.assert_allclose(kl_project_couplings(np.outer(a, b), a, b), np.outer(a, b), atol=1e-15)


def test_projection_symmetric_example():
    Q = kl_project_couplings(np.ones((2, 2)), [0.5, 0.5], [0.5, 0.5])
    np.testing.assert_allclose(Q, np.full((2, 2), 0.25), atol=1e-15)


def test_projection_sampled_optimality(rng):
    a, b = random_simplex(rng, 3), random_simplex(rng, 4)
    P = rng.uniform(0.1, 2.0, (3, 4))
    Q = kl_project_couplings(P, a, b)
    assert np.abs(Q.sum(1) - a).max() <= 1e-9
    assert np.abs(Q.sum(0) - b).max() <= 1e-9
    best = kl_divergence(Q, P)
    for _ in range(1000):
        assert best <= kl_divergence(random_feasible(rng, a, b), P) + 1e-12


def test_projection_matches_generic_solver(rng):
    for _ in range(3):
        a, b = random_simplex(rng, 4), random_simplex(rng, 5)
        P = rng.uniform(0.1, 1.0, (4, 5))
        ours = kl_divergence(kl_project_couplings(P, a, b), P)
        assert abs(ours - slsqp_kl_oracle(P, a, b)[0]) <= 1e-8


def test_projection_rejects_zero_and_nan():
    with pytest.raises(ValueError):
        kl_project_couplings([[0.0, 1.0], [1.0, 1.0]], [0.5, 0.5], [0.5, 0.5])
    with pytest.raises(ValueError):
        kl_project_couplings([[np.nan, 1.0], [1.0, 1.0]], [0.5, 0.5], [0.5, 0.5])


def test_second_marginal_example_and_kkt():
    P = np.array([[1.0, 2.0], [3.0, 4.0]])
    Q = kl_project_second_marginal(P, [0.5, 0.5])
    np.testing.assert_allclose(Q, [[0.125, 1 / 6], [0.375, 1 / 3]], atol=1e-16)
    L = np.log(Q / P)
    assert np.ptp(L, axis=0).max() <= 1e-12
    np.testing.assert_array_equal(Q.sum(0), [0.5, 0.5])


def test_first_marginal_example_and_transpose_symmetry(rng):
    Q = kl_project_first_marginal([[1.0, 1.0], [1.0, 3.0]], [0.5, 0.5])
    np.testing.assert_allclose(Q, [[0.25, 0.25], [0.125, 0.375]], atol=1e-16)
    P = rng.uniform(0.1, 1, (3, 5))
    b = random_simplex(rng, 5)
    np.testing.assert_allclose(kl_project_first_marginal(P.T, b).T,
                               kl_project_second_marginal(P, b), rtol=1e-15)
    with pytest.raises(ValueError):
        kl_project_first_marginal([[0.0, 0.0], [1.0, 1.0]], [0.5, 0.5])
    with pytest.raises(ValueError):
        kl_project_second_marginal([[0.0, 1.0], [0.0, 1.0]], [0.5, 0.5])


def test_projections_idempotent_and_positive(rng):
    a, b = random_simplex(rng, 4), random_simplex(rng, 3)
    P = rng.uniform(0.01, 5, (4, 3))
    for proj in (lambda M: kl_project_couplings(M, a, b),
                 lambda M: kl_project_second_marginal(M, b),
                 lambda M: kl_project_first_marginal(M, a)):
        Q = proj(P)
        assert np.all(Q > 0)
        np.testing.assert_allclose(proj(Q), Q, atol=1e-12)


def test_log_and_standard_domain_agree(rng):
    a, b = random_simplex(rng, 6), random_simplex(rng, 7)
    L = rng.normal(size=(6, 7))
    std = scale_log_kernel(L, a, b, 1e-12, 10000, log_domain=False)
    log = scale_log_kernel(L, a, b, 1e-12, 10000, log_domain=True)
    assert not std.log_domain and log.log_domain
    np.testing.assert_allclose(np.exp(std.log_plan), np.exp(log.log_plan), atol=1e-9)


def test_log_domain_auto_switch(rng):
    a, b = random_simplex(rng, 5), random_simplex(rng, 5)
    L = rng.normal(size=(5, 5)) * 600.0
    res = scale_log_kernel(L, a, b, 1e-10, 100000)
    assert res.log_domain and res.converged
    P = np.exp(res.log_plan)
    assert np.all(np.isfinite(P))
    assert np.abs(P.sum(1) - a).max() <= 1e-10


def test_eot_two_by_two_closed_form():
    eps = 0.1
    res = sinkhorn_eot(np.eye(2), [0.5, 0.5], [0.5, 0.5], SinkhornConfig(epsilon=eps, marginal_tol=1e-13))
    # symmetric fixed point: diagonal / off-diagonal ratio is exp(1/eps)
    d = 0.5 / (1 + np.exp(-1 / eps))
    np.testing.assert_allclose(res.plan, [[d, 0.5 - d], [0.5 - d, d]], atol=1e-10)
    assert res.plan[0, 0] > res.plan[0, 1]


def test_eot_limits(rng):
    a, b = random_simplex(rng, 3), random_simplex(rng, 4)
    C = rng.uniform(size=(3, 4))
    res = sinkhorn_eot(C, a, b, SinkhornConfig(epsilon=1e3))
    assert np.abs(res.plan - np.outer(a, b)).max() <= 1e-3
    one = sinkhorn_eot([[3.0]], [1.0], [1.0])
    np.testing.assert_allclose(one.plan, [[1.0]])


def test_eot_dual_bounds_primal(rng):
    a, b = random_simplex(rng, 5), random_simplex(rng, 6)
    C = rng.uniform(size=(5, 6))
    res = sinkhorn_eot(C, a, b, SinkhornConfig(epsilon=0.05, marginal_tol=1e-12))
    assert res.converged and np.all(res.plan > 0)
    assert res.dual_value >= res.value - 1e-10
    assert res.dual_value - res.value <= 1e-9


def test_eot_nonconvergence_flag(rng):
    a, b = random_simplex(rng, 5), random_simplex(rng, 5)
    res = sinkhorn_eot(rng.uniform(size=(5, 5)), a, b,
                       SinkhornConfig(epsilon=1e-3, max_iters=2, marginal_tol=1e-14))
    assert not res.converged and res.iterations == 2


def test_config_validation():
    with pytest.raises(ValueError):
        SinkhornConfig(epsilon=0)
    with pytest.raises(ValueError):
        SinkhornConfig(max_iters=0)
