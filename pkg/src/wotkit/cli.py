"""Command-line entry point: ``wotkit <command> ...``.

Exit codes: 0 success, 2 invalid configuration or missing input, 3 solver
did not converge (artifacts are still written, with ``converged: false``).

A run directory produced by ``solve`` holds ``report.json``, ``plan.csv``,
``trace.csv`` and copies of the two measures; dual runs add ``phi.csv`` and
``wages.csv``. ``wages``, ``psi-grid`` and ``metrics`` read run directories.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .bregman import SinkhornConfig, sinkhorn_eot
from .costs import CONE, SIMPLEX, CesParams, ces_cost, ces_matrix, linear_cost
from .dual import BARYCENTRIC, CONICAL, DualConfig, WageFunction, recover_psi, solve_dual
from .io import (
    InputError,
    read_json,
    read_measure,
    read_plan,
    read_table,
    write_json,
    write_measure,
    write_plan,
    write_table,
    write_trace,
)
from .labor_market import (
    alpha_to_theta,
    convexity_gap,
    make_scenario,
    quarter_disc_segments,
    skill_profile,
    wage_surface,
)
from .measures import DiscreteMeasure, feasibility_residuals, firm_sizes
from .primal import PrimalConfig, objective_f, solve_primal
from .simplex_lp import exact_ot

logger = logging.getLogger("wotkit")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3

PROBLEMS = ("ot", "eot", "wot", "wotuk")
COSTS = ("linear", "ces-barycentric", "ces-conical")
SOLVERS = ("primal", "dual")
SUPPORT_TOL = 1e-6


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioSpec:
    kind: str = "A"
    n: int = 10
    m: int = 30
    kappa: float = 2.0
    z_range: tuple = (1.0, 1.0)


@dataclass
class RunConfig:
    """Everything a run depends on. ``firms``/``workers`` are CSV paths; when
    both are omitted the measures come from ``scenario`` and ``seed``."""

    problem: str = "wot"
    cost: str | None = None
    solver: str = "primal"
    firms: str | None = None
    workers: str | None = None
    cost_matrix: str | None = None
    out_dir: str = "run"
    seed: int = 0
    scenario: dict = field(default_factory=dict)
    ces: dict = field(default_factory=dict)
    primal: dict = field(default_factory=dict)
    dual: dict = field(default_factory=dict)
    eot: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return asdict(self)


def _section(raw, cls, name):
    if not isinstance(raw, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {', '.join(unknown)}")
    try:
        obj = cls(**raw)
        if cls is ScenarioSpec:
            obj.z_range = tuple(float(v) for v in obj.z_range)
            if len(obj.z_range) != 2:
                raise ValueError("z_range needs two numbers")
        return obj
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name!r} section: {exc}") from None


def parse_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    """Validate a raw config mapping; unknown keys are errors. Relative
    paths are resolved against ``base_dir``."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = RunConfig(**raw)
    if cfg.problem not in PROBLEMS:
        raise ConfigError(f"problem must be one of {PROBLEMS}, got {cfg.problem!r}")
    if cfg.cost is None:
        cfg.cost = "ces-conical" if cfg.problem == "wotuk" else "ces-barycentric"
    if cfg.cost not in COSTS:
        raise ConfigError(f"cost must be one of {COSTS}, got {cfg.cost!r}")
    if cfg.solver not in SOLVERS:
        raise ConfigError(f"solver must be one of {SOLVERS}, got {cfg.solver!r}")
    if cfg.cost == "ces-conical" and cfg.problem != "wotuk":
        raise ConfigError("ces-conical cost is only compatible with problem 'wotuk'")
    if cfg.cost == "ces-barycentric" and cfg.problem == "wotuk":
        raise ConfigError("ces-barycentric cost is only compatible with problems wot, ot, eot")
    if cfg.solver == "dual" and cfg.problem not in ("wot", "wotuk"):
        raise ConfigError("the dual solver applies to wot and wotuk only")
    if cfg.cost_matrix is not None and cfg.cost != "linear":
        raise ConfigError("cost_matrix is only used with cost 'linear'")
    if (cfg.firms is None) != (cfg.workers is None):
        raise ConfigError("give both 'firms' and 'workers', or neither (scenario mode)")
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool):
        raise ConfigError("seed must be an integer")
    for name in ("firms", "workers", "cost_matrix", "out_dir"):
        v = getattr(cfg, name)
        if v is not None and not isinstance(v, str):
            raise ConfigError(f"{name} must be a path string")
        if v is not None and base_dir is not None and not Path(v).is_absolute():
            setattr(cfg, name, str(base_dir / v))
    _section(cfg.scenario, ScenarioSpec, "scenario")
    _section(cfg.ces, CesParams, "ces")
    _section(cfg.primal, PrimalConfig, "primal")
    _section(cfg.dual, DualConfig, "dual")
    _section(cfg.eot, SinkhornConfig, "eot")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(read_json(path), path.parent)


def _measures(cfg: RunConfig):
    if cfg.firms is not None:
        return read_measure(cfg.firms), read_measure(cfg.workers)
    sc = _section(cfg.scenario, ScenarioSpec, "scenario")
    try:
        return make_scenario(sc.kind, sc.n, sc.m, sc.kappa, sc.z_range, cfg.seed)
    except ValueError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from None


def _linear_matrix(cfg, firms, workers):
    if cfg.cost_matrix is not None:
        _, F = read_table(cfg.cost_matrix)
        if F.shape != (len(firms), len(workers)):
            raise InputError(f"{cfg.cost_matrix}: matrix shape {F.shape} does not match "
                             f"{len(firms)} firms x {len(workers)} workers")
        return F
    return _ces_matrix(cfg, firms, workers)


def _ces_matrix(cfg, firms, workers):
    try:
        return ces_matrix(firms.points, workers.points, CesParams(**cfg.ces))
    except ValueError as exc:
        raise ConfigError(f"measures do not fit a CES economy: {exc}") from None


def _cost_model(cfg, firms, workers):
    domain = CONE if cfg.problem == "wotuk" else SIMPLEX
    if cfg.cost == "linear":
        return linear_cost(_linear_matrix(cfg, firms, workers), domain)
    try:
        return ces_cost(firms.points, workers.points, CesParams(**cfg.ces), domain)
    except ValueError as exc:
        raise ConfigError(f"measures do not fit a CES economy: {exc}") from None


def _provenance(cfg: RunConfig) -> str:
    return f"wotkit {__version__} config=" + json.dumps(cfg.echo(), sort_keys=True,
                                                         separators=(",", ":"))


def _support(P) -> int:
    return int(np.sum(np.asarray(P) > SUPPORT_TOL))


def run_model(cfg: RunConfig, firms, workers):
    """Solve one configured model. Returns ``(plan, result dict, trace, extra)``
    where ``extra`` holds wage data for dual runs."""
    a, b = firms.weights, workers.weights
    if cfg.problem == "ot":
        F = _linear_matrix(cfg, firms, workers) if cfg.cost == "linear" else _ces_matrix(cfg, firms, workers)
        value, P = exact_ot(F, a, b)
        res = {"problem": "ot", "objective": value, "converged": True, "iterations": 0}
        return P, res, [(0, value, 0.0)], None
    if cfg.problem == "eot":
        F = _linear_matrix(cfg, firms, workers) if cfg.cost == "linear" else _ces_matrix(cfg, firms, workers)
        sk = SinkhornConfig(**{"epsilon": 0.1, "marginal_tol": 1e-9, **cfg.eot})
        r = sinkhorn_eot(F, a, b, sk)
        res = {"problem": "eot", "objective": r.value, "dual_value": r.dual_value,
               "transport_value": float(np.sum(F * r.plan)), "epsilon": sk.epsilon,
               "iterations": r.iterations, "marginal_error": r.marginal_error,
               "converged": r.converged}
        return r.plan, res, [(r.iterations, r.value, r.dual_value - r.value)], None
    cost = _cost_model(cfg, firms, workers)
    if cfg.solver == "primal":
        rep = solve_primal(a, b, cost, cfg.problem, PrimalConfig(**cfg.primal))
        return rep.plan, rep.summary(), rep.trace, None
    dcfg = DualConfig(**cfg.dual)
    d = solve_dual(a, b, cost, cfg.problem, dcfg, primal_config=PrimalConfig(**cfg.primal))
    P = d.plan
    rows, cols = feasibility_residuals(P, a, b, cfg.problem)
    res = {"problem": cfg.problem, "objective": d.dual_objective,
           "plan_output": objective_f(P, a, cost), "row_residual": rows, "col_residual": cols,
           "converged": dcfg.outer_tol is None or d.outer_residual <= dcfg.outer_tol,
           "mode": d.wage.mode, **d.summary()}
    return P, res, [(d.outer_iterations, d.dual_objective, d.inner.gap_bound or 0.0)], d.wage


def _write_wages(out: Path, wage: WageFunction, comment):
    j = np.arange(len(wage.phi))
    write_table(out / "phi.csv", ("worker_index", "phi"), [j, wage.phi], comment)
    write_table(out / "wages.csv", ("worker_index", "phi", "psi"),
                [j, wage.phi, wage.psi_values], comment)


def cmd_solve(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    firms, workers = _measures(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    P, result, trace, wage = run_model(cfg, firms, workers)
    wall = time.perf_counter() - t0
    comment = _provenance(cfg)
    write_measure(out / "firms.csv", firms, _measure_kind(firms, 3), comment)
    write_measure(out / "workers.csv", workers, _measure_kind(workers, 2), comment)
    write_plan(out / "plan.csv", P, comment)
    write_trace(out / "trace.csv", trace, comment)
    if wage is not None:
        _write_wages(out, wage, comment)
    result["support"] = _support(P)
    report = _report("solve", cfg, result, wall)
    write_json(out / "report.json", report)
    print(json.dumps({k: result[k] for k in ("problem", "objective", "converged")}))
    return EXIT_OK if result["converged"] else EXIT_NOT_CONVERGED


def _measure_kind(measure: DiscreteMeasure, dim: int):
    if measure.dim != dim:
        return "generic"
    return "firms" if dim == 3 else "workers"


def _report(command, cfg, result, wall):
    return {
        "schema": 1,
        "command": command,
        "library": {"name": "wotkit", "version": __version__, "backend": BACKEND},
        "config": cfg.echo(),
        "result": result,
        "wall_time_s": wall,
    }


# -- compare ------------------------------------------------------------------

COMPARE_MODELS = (
    ("ot", "ces-barycentric"),
    ("eot", "ces-barycentric"),
    ("wot", "ces-barycentric"),
    ("wotuk", "ces-conical"),
)


def _threads() -> int:
    raw = os.environ.get("WOTKIT_THREADS", "")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"WOTKIT_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(len(COMPARE_MODELS), os.cpu_count() or 1))


def mixing_stats(P, workers: DiscreteMeasure) -> dict:
    """Support size, largest entry and per-row mixing of a plan."""
    P = np.asarray(P)
    mask = P > SUPPORT_TOL
    stats = {
        "support": int(mask.sum()),
        "max_entry": float(P.max()),
        "row_support": mask.sum(axis=1).tolist(),
    }
    if workers.dim == 2:
        theta = skill_profile(workers.points)
        spread = [float(np.ptp(theta[row])) if row.any() else 0.0 for row in mask]
        stats["row_theta_spread"] = spread
    return stats


def cmd_compare(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    firms, workers = _measures(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def job(spec):
        problem, cost = spec
        sub = RunConfig(**{**cfg.echo(), "problem": problem, "cost": cost, "solver": "primal"})
        try:
            return run_model(sub, firms, workers)
        except (ValueError, RuntimeError) as exc:
            return exc

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        outcomes = list(pool.map(job, COMPARE_MODELS))
    comment = _provenance(cfg)
    summary = {}
    ok = True
    for (problem, _), outcome in zip(COMPARE_MODELS, outcomes):
        if isinstance(outcome, Exception):
            summary[problem] = {"error": str(outcome)}
            ok = False
            continue
        P, result, _, _ = outcome
        write_plan(out / f"plan_{problem}.csv", P, comment)
        entry = {"objective": result["objective"], "converged": result["converged"]}
        entry.update(mixing_stats(P, workers))
        if problem == "wotuk":
            entry["firm_sizes"] = firm_sizes(P, firms.weights).tolist()
        summary[problem] = entry
        ok = ok and bool(result["converged"])
    write_measure(out / "firms.csv", firms, _measure_kind(firms, 3), comment)
    write_measure(out / "workers.csv", workers, _measure_kind(workers, 2), comment)
    write_json(out / "summary.json", _report("compare", cfg, summary, time.perf_counter() - t0))
    print(json.dumps({k: v.get("support", v.get("error")) for k, v in summary.items()}))
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


# -- run-directory readers ----------------------------------------------------

def _load_run(run_dir):
    run = Path(run_dir)
    report = read_json(run / "report.json")
    try:
        cfg = parse_config(report["config"])
    except KeyError:
        raise InputError(f"{run / 'report.json'}: no config echo") from None
    return run, report, cfg


def _wage_from_run(run_dir):
    run, report, cfg = _load_run(run_dir)
    _, phi = read_table(run / "phi.csv")
    workers = read_measure(run / "workers.csv")
    mode = report["result"].get("mode") or (CONICAL if cfg.problem == "wotuk" else BARYCENTRIC)
    return recover_psi(phi[:, 1], workers.points, mode), cfg


def cmd_wages(args) -> int:
    if args.run_dir:
        wage, cfg = _wage_from_run(args.run_dir)
        comment = _provenance(cfg)
    else:
        if not (args.phi and args.workers):
            raise ConfigError("wages needs --run-dir, or --phi and --workers")
        _, phi = read_table(args.phi)
        workers = read_measure(args.workers)
        wage = recover_psi(phi[:, -1], workers.points, args.mode)
        comment = f"wotkit {__version__} mode={args.mode}"
    out = Path(args.out or Path(args.run_dir or ".") / "wages.csv")
    j = np.arange(len(wage.phi))
    write_table(out, ("worker_index", "phi", "psi"), [j, wage.phi, wage.psi_values], comment)
    print(out)
    return EXIT_OK


def cmd_psi_grid(args) -> int:
    wage, cfg = _wage_from_run(args.run_dir)
    if args.res < 2:
        raise ConfigError("--res must be at least 2")
    x1, x2, psi, feas = wage_surface(wage, args.res, args.radius)
    out = Path(args.out or Path(args.run_dir) / "psi_grid.csv")
    write_table(out, ("x1", "x2", "psi", "feasible"), [x1, x2, psi, feas], _provenance(cfg))
    print(out)
    return EXIT_OK


def cmd_metrics(args) -> int:
    run, report, cfg = _load_run(args.run_dir)
    P = read_plan(run / "plan.csv")
    firms = read_measure(run / "firms.csv")
    workers = read_measure(run / "workers.csv")
    if firms.dim != 3 or workers.dim != 2:
        raise ConfigError("metrics need a two-skill economy (firms z,alpha1,alpha2; workers x1,x2)")
    comment = _provenance(cfg)
    alpha2, theta = alpha_to_theta(P, firms, workers)
    write_table(run / "theta.csv", ("alpha2", "theta_bar"), [alpha2, theta], comment)
    metrics = {"theta_nondecreasing": bool(np.all(np.diff(theta) >= -1e-9))}
    if cfg.problem == "wotuk":
        N = firm_sizes(P, firms.weights)
        write_table(run / "sizes.csv", ("alpha2", "N"), [firms.points[:, 2], N], comment)
    if (run / "phi.csv").is_file():
        wage, _ = _wage_from_run(run)
        metrics["convexity_gap"] = convexity_gap(wage, quarter_disc_segments())
    write_json(run / "metrics.json", metrics)
    print(json.dumps(metrics))
    return EXIT_OK


def cmd_scenario(args) -> int:
    try:
        firms, workers = make_scenario(args.kind, args.n, args.m, args.kappa,
                                       (args.z_low, args.z_high), args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out_dir)
    comment = (f"wotkit {__version__} scenario kind={args.kind} n={args.n} m={args.m} "
               f"kappa={args.kappa!r} z_range=({args.z_low!r},{args.z_high!r}) seed={args.seed}")
    write_measure(out / "firms.csv", firms, "firms", comment)
    write_measure(out / "workers.csv", workers, "workers", comment)
    print(out)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

_OVERRIDES = {
    "problem": "problem", "cost": "cost", "solver": "solver", "firms": "firms",
    "workers": "workers", "cost_matrix": "cost_matrix", "out_dir": "out_dir", "seed": "seed",
}
_PRIMAL_OVERRIDES = {"gamma": "gamma", "epsilon": "epsilon", "max_iters": "max_iters",
                     "gap_method": "gap_method"}


def _run_config(args, forced: dict) -> RunConfig:
    raw = read_json(args.config) if args.config else {}
    base = Path(args.config).parent if args.config else None
    if not isinstance(raw, dict):
        raise ConfigError(f"{args.config}: config must be a JSON object")
    raw = dict(raw)
    # command-line paths are relative to the working directory, so resolve
    # them before the config's own paths are anchored at its directory
    cwd = Path.cwd()
    for opt, key in _OVERRIDES.items():
        v = getattr(args, opt, None)
        if v is not None:
            raw[key] = str(cwd / v) if key in ("firms", "workers", "cost_matrix", "out_dir") else v
    primal = dict(raw.get("primal", {}))
    for opt, key in _PRIMAL_OVERRIDES.items():
        v = getattr(args, opt, None)
        if v is not None:
            primal[key] = v
    if primal:
        raw["primal"] = primal
    if getattr(args, "eot_epsilon", None) is not None:
        raw["eot"] = {**raw.get("eot", {}), "epsilon": args.eot_epsilon}
    raw.update(forced)
    return parse_config(raw, base)


def _add_run_flags(p, with_problem=True, with_solver=True):
    p.add_argument("--config", help="JSON run config; flags override its keys")
    if with_problem:
        p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--cost", choices=COSTS)
    if with_solver:
        p.add_argument("--solver", choices=SOLVERS)
    p.add_argument("--firms", help="firm measure CSV (z,alpha1,alpha2,weight)")
    p.add_argument("--workers", help="worker measure CSV (x1,x2,weight)")
    p.add_argument("--cost-matrix", dest="cost_matrix", help="dense F matrix CSV for linear cost")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--gap-method", dest="gap_method", choices=("exact_lp", "entropic_bound"))
    p.add_argument("--eot-epsilon", dest="eot_epsilon", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wotkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"wotkit {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scenario", aliases=["make-scenario"], help="write firms.csv and workers.csv")
    sc.add_argument("--kind", choices=("A", "B", "a", "b"), required=True)
    sc.add_argument("--n", type=int, default=10)
    sc.add_argument("--m", type=int, default=30)
    sc.add_argument("--kappa", type=float, default=2.0)
    sc.add_argument("--z-low", dest="z_low", type=float, default=1.0)
    sc.add_argument("--z-high", dest="z_high", type=float, default=1.0)
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--out-dir", dest="out_dir", default=".")

    _add_run_flags(sub.add_parser("solve", help="solve one model"))
    for name, problem in (("solve-wot", "wot"), ("solve-wotuk", "wotuk"), ("solve-eot", "eot")):
        p = sub.add_parser(name, help=f"solve with --problem {problem}")
        _add_run_flags(p, with_problem=False)
        p.set_defaults(forced={"problem": problem})
    p = sub.add_parser("solve-dual", help="nested dual scheme and wage envelope")
    _add_run_flags(p, with_solver=False)
    p.set_defaults(forced={"solver": "dual"})
    p = sub.add_parser("compare", help="OT, EOT, WOT and WOTUK plans on one economy")
    _add_run_flags(p, with_problem=False, with_solver=False)

    w = sub.add_parser("wages", help="tabulate phi and psi at the worker types")
    w.add_argument("--run-dir", dest="run_dir")
    w.add_argument("--phi", help="CSV whose last column is phi")
    w.add_argument("--workers")
    w.add_argument("--mode", choices=(BARYCENTRIC, CONICAL), default=BARYCENTRIC)
    w.add_argument("--out")

    g = sub.add_parser("psi-grid", help="psi on a square grid")
    g.add_argument("--run-dir", dest="run_dir", required=True)
    g.add_argument("--res", type=int, default=64)
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--out")

    m = sub.add_parser("metrics", help="skill profiles, firm sizes, wage convexity")
    m.add_argument("--run-dir", dest="run_dir", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cmd = args.command
        if cmd in ("scenario", "make-scenario"):
            return cmd_scenario(args)
        if cmd in ("solve", "solve-wot", "solve-wotuk", "solve-eot", "solve-dual"):
            return cmd_solve(_run_config(args, getattr(args, "forced", {})))
        if cmd == "compare":
            return cmd_compare(_run_config(args, {}))
        if cmd == "wages":
            return cmd_wages(args)
        if cmd == "psi-grid":
            return cmd_psi_grid(args)
        if cmd == "metrics":
            return cmd_metrics(args)
    except (ConfigError, InputError) as exc:
        print(f"wotkit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    parser.error(f"unknown command {args.command}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
