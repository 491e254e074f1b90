import warnings

import numpy as np
import pytest
from scipy.optimize import minimize


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_simplex(rng, k):
    w = rng.uniform(0.2, 1.0, k)
    return w / w.sum()


def random_firms(rng, n, z_range=(0.5, 1.5)):
    a2 = rng.uniform(0.05, 0.95, n)
    return np.column_stack([rng.uniform(*z_range, n), 1.0 - a2, a2])


def random_workers(rng, m):
    th = rng.uniform(0.05, np.pi / 2 - 0.05, m)
    return np.column_stack([np.cos(th), np.sin(th)])


def slsqp_kl_oracle(P, a, b, cols_only=False):
    """Minimum of KL(Q|P) over couplings (or over column constraints only),
    by a generic SQP solver on the entries of Q."""
    n, m = P.shape

    def obj(q):
        Q = np.maximum(q.reshape(n, m), 1e-300)
        return float(np.sum(Q * np.log(Q / P) - Q + P))

    def jac(q):
        return np.log(np.maximum(q, 1e-300) / P.ravel())

    cons = [{"type": "eq", "fun": lambda q: q.reshape(n, m).sum(0) - b}]
    if not cols_only:
        # the last row constraint is implied by the others
        cons.append({"type": "eq", "fun": lambda q: q.reshape(n, m).sum(1)[:-1] - a[:-1]})
    x0 = np.outer(a if a is not None else np.full(n, 1.0 / n), b).ravel()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(obj, x0, jac=jac, constraints=cons, bounds=[(1e-14, None)] * (n * m),
                       method="SLSQP", options={"ftol": 1e-15, "maxiter": 2000})
    return res.fun, res.x.reshape(n, m)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
