"""Compare the compiled kernels with the numpy fallback.

Kernel timings call both modules directly; the end-to-end timings run each
solver in a subprocess with and without ``WOTKIT_PURE_PYTHON=1`` so the
backend is chosen exactly as in normal use.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 50 200]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from wotkit import _pykernels

try:
    from wotkit import _ckernels
except ImportError:  # extension not built
    _ckernels = None

E2E = """
import json, time
import numpy as np
from wotkit import BACKEND, ces_cost, ces_matrix, exact_ot, make_scenario, solve_primal, SIMPLEX
f, w = make_scenario("A", {n}, {n})
t0 = time.perf_counter(); exact_ot(ces_matrix(f.points, w.points), f.weights, w.weights); t1 = time.perf_counter()
solve_primal(f.weights, w.weights, ces_cost(f.points, w.points, domain=SIMPLEX), "wot"); t2 = time.perf_counter()
print(json.dumps({{"backend": BACKEND, "exact_ot": t1 - t0, "solve_primal_wot": t2 - t1}}))
"""


def sinkhorn_case(n, rng):
    K = np.exp(-rng.uniform(size=(n, n)) / 0.05)
    a = np.full(n, 1.0 / n)
    b = rng.dirichlet(np.ones(n))
    return K, a, b


def time_kernel(mod, name, n, repeat, rng):
    if name == "sinkhorn_scale":
        K, a, b = sinkhorn_case(n, rng)
        def run():
            mod.sinkhorn_scale(K, a, b, np.ones(n), np.ones(n), 1e-9, 10_000)
    elif name == "log_sinkhorn":
        K, a, b = sinkhorn_case(n, rng)
        L = np.log(K)
        def run():
            mod.log_sinkhorn(L, np.log(a), np.log(b), np.zeros(n), np.zeros(n), 1e-9, 10_000)
    elif name == "pivot":
        T0 = rng.normal(size=(n, 2 * n + 1))
        def run():
            T = T0.copy()
            for k in range(min(n, 20)):
                mod.pivot(T, k, k)
    elif name == "ratio_test":
        T = np.abs(rng.normal(size=(n, 2 * n + 1)))
        basis = np.arange(n, dtype=np.int64)
        def run():
            for col in range(min(n, 20)):
                mod.ratio_test(T, col, basis, n, 1e-12)
    else:
        raise ValueError(name)
    return min(timeit.repeat(run, number=1, repeat=repeat))


def end_to_end(n, pure):
    env = dict(os.environ)
    env.pop("WOTKIT_PURE_PYTHON", None)
    if pure:
        env["WOTKIT_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", E2E.format(n=n)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 200])
    ap.add_argument("--e2e-size", type=int, default=30)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'n':>6}{'cython [ms]':>14}{'python [ms]':>14}{'speedup':>10}")
    for name in ("sinkhorn_scale", "log_sinkhorn", "pivot", "ratio_test"):
        for n in args.sizes:
            tc = time_kernel(_ckernels, name, n, args.repeat, np.random.default_rng(n))
            tp = time_kernel(_pykernels, name, n, args.repeat, np.random.default_rng(n))
            print(f"{name:<16}{n:>6}{1e3 * tc:>14.3f}{1e3 * tp:>14.3f}{tp / tc:>10.1f}x")
    fast, slow = end_to_end(args.e2e_size, False), end_to_end(args.e2e_size, True)
    for key in ("exact_ot", "solve_primal_wot"):
        print(f"{key:<16}{args.e2e_size:>6}{1e3 * fast[key]:>14.1f}{1e3 * slow[key]:>14.1f}"
              f"{slow[key] / fast[key]:>10.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
