import json

import numpy as np
import pytest

from wotkit.cli import main
from wotkit.io import read_measure, read_plan, read_table, write_measure, write_table
from wotkit.labor_market import make_scenario
from wotkit.measures import DiscreteMeasure


@pytest.fixture
def economy(tmp_path):
    assert main(["scenario", "--kind", "A", "--n", "6", "--m", "8", "--out-dir", str(tmp_path / "sc")]) == 0
    return tmp_path / "sc" / "firms.csv", tmp_path / "sc" / "workers.csv"


def _report(path):
    return json.loads((path / "report.json").read_text())


def test_scenario_kappa_zero_uniform(tmp_path):
    assert main(["make-scenario", "--kind", "B", "--n", "3", "--m", "5", "--kappa", "0",
                 "--out-dir", str(tmp_path)]) == 0
    w = read_measure(tmp_path / "workers.csv")
    np.testing.assert_allclose(w.weights, 0.2, rtol=1e-15)
    assert (tmp_path / "firms.csv").read_text().splitlines()[1] == "z,alpha1,alpha2,weight"


def test_wot_linear_matches_ot(tmp_path, rng):
    a = rng.uniform(0.5, 1, 8)
    b = rng.uniform(0.5, 1, 8)
    write_measure(tmp_path / "f.csv", DiscreteMeasure(np.arange(8.0), a))
    write_measure(tmp_path / "w.csv", DiscreteMeasure(np.arange(8.0), b))
    write_table(tmp_path / "F.csv", [str(j) for j in range(8)], list(rng.uniform(size=(8, 8)).T))
    common = ["--firms", str(tmp_path / "f.csv"), "--workers", str(tmp_path / "w.csv"),
              "--cost", "linear", "--cost-matrix", str(tmp_path / "F.csv")]
    assert main(["solve", "--problem", "wot", "--out-dir", str(tmp_path / "wot"), *common]) == 0
    assert main(["solve", "--problem", "ot", "--out-dir", str(tmp_path / "ot"), *common]) == 0
    wot = _report(tmp_path / "wot")["result"]["objective"]
    ot = _report(tmp_path / "ot")["result"]["objective"]
    assert abs(wot - ot) <= 1e-3 * abs(ot)
    header, trace = read_table(tmp_path / "wot" / "trace.csv")
    assert header == ["iter", "objective", "ugap"] and len(trace) >= 1


def test_missing_input_exit_2(tmp_path, capsys):
    rc = main(["solve", "--firms", str(tmp_path / "missing_firms.csv"),
               "--workers", str(tmp_path / "w.csv"), "--out-dir", str(tmp_path / "r")])
    assert rc == 2
    assert "missing_firms.csv" in capsys.readouterr().err
    rc = main(["solve", "--config", str(tmp_path / "nope.json")])
    assert rc == 2 and "nope.json" in capsys.readouterr().err


@pytest.mark.parametrize("config, needle", [
    ({"problem": "wot", "colour": "red"}, "colour"),
    ({"problem": "wot", "primal": {"gamma": 0.1, "speed": 2}}, "speed"),
    ({"problem": "wot", "cost": "ces-conical"}, "conical"),
    ({"problem": "wotuk", "cost": "ces-barycentric"}, "barycentric"),
    ({"problem": "ot", "solver": "dual"}, "dual"),
    ({"problem": "xyz"}, "problem"),
    ({"problem": "wot", "primal": {"gamma": -1}}, "gamma"),
    ({"problem": "wot", "firms": "f.csv"}, "both"),
])
def test_invalid_configs_exit_2(tmp_path, capsys, config, needle):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(config))
    assert main(["solve", "--config", str(path)]) == 2
    assert needle in capsys.readouterr().err


def test_config_file_with_relative_paths_and_determinism(tmp_path, economy):
    firms, workers = economy
    cfg = {"problem": "wotuk", "firms": str(firms), "workers": str(workers),
           "out_dir": "run", "seed": 3, "primal": {"epsilon": 1e-3}}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert main(["solve", "--config", str(tmp_path / "cfg.json")]) == 0
    first = _report(tmp_path / "run")
    plan1 = (tmp_path / "run" / "plan.csv").read_bytes()
    assert main(["solve", "--config", str(tmp_path / "cfg.json")]) == 0
    second = _report(tmp_path / "run")
    assert (tmp_path / "run" / "plan.csv").read_bytes() == plan1
    first.pop("wall_time_s")
    second.pop("wall_time_s")
    assert first == second
    assert first["library"]["version"] and first["config"]["seed"] == 3
    assert first["config"]["cost"] == "ces-conical"
    assert plan1.startswith(b"# wotkit ")


def test_scenario_mode_config(tmp_path):
    cfg = {"problem": "wot", "scenario": {"kind": "B", "n": 4, "m": 6, "z_range": [0.5, 1.5]},
           "seed": 11, "out_dir": str(tmp_path / "r")}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert main(["solve-wot", "--config", str(tmp_path / "c.json")]) == 0
    z = read_measure(tmp_path / "r" / "firms.csv").points[:, 0]
    f, _ = make_scenario("B", 4, 6, z_range=(0.5, 1.5), seed=11)
    np.testing.assert_array_equal(z, f.points[:, 0])


def test_nonconvergence_exit_3(tmp_path, economy):
    firms, workers = economy
    out = tmp_path / "r"
    rc = main(["solve-wotuk", "--firms", str(firms), "--workers", str(workers),
               "--out-dir", str(out), "--max-iters", "2", "--epsilon", "1e-12"])
    assert rc == 3
    assert _report(out)["result"]["converged"] is False
    assert (out / "plan.csv").is_file() and (out / "trace.csv").is_file()


def test_eot_command(tmp_path, economy):
    firms, workers = economy
    assert main(["solve-eot", "--firms", str(firms), "--workers", str(workers),
                 "--out-dir", str(tmp_path / "e"), "--eot-epsilon", "0.05"]) == 0
    res = _report(tmp_path / "e")["result"]
    assert res["epsilon"] == 0.05 and res["converged"]


def test_dual_wages_psi_grid_and_metrics(tmp_path, economy):
    firms, workers = economy
    out = tmp_path / "d"
    assert main(["solve-dual", "--problem", "wotuk", "--firms", str(firms), "--workers", str(workers),
                 "--out-dir", str(out)]) == 0
    assert main(["wages", "--run-dir", str(out), "--out", str(tmp_path / "wages.csv")]) == 0
    header, W = read_table(tmp_path / "wages.csv")
    assert header == ["worker_index", "phi", "psi"]
    assert np.all(W[:, 2] <= W[:, 1] + 1e-9)
    assert main(["psi-grid", "--run-dir", str(out), "--res", "6"]) == 0
    header, G = read_table(out / "psi_grid.csv")
    assert header == ["x1", "x2", "psi", "feasible"] and len(G) == 36
    assert main(["metrics", "--run-dir", str(out)]) == 0
    assert read_table(out / "theta.csv")[0] == ["alpha2", "theta_bar"]
    h, S = read_table(out / "sizes.csv")
    assert h == ["alpha2", "N"] and len(S) == 6
    m = json.loads((out / "metrics.json").read_text())
    assert m["convexity_gap"] >= -1e-9


def test_wages_from_explicit_files(tmp_path, economy):
    _, workers = economy
    write_table(tmp_path / "phi.csv", ["worker_index", "phi"], [np.arange(8), np.linspace(1, 2, 8)])
    assert main(["wages", "--phi", str(tmp_path / "phi.csv"), "--workers", str(workers),
                 "--mode", "conical", "--out", str(tmp_path / "w.csv")]) == 0
    assert main(["wages", "--phi", str(tmp_path / "phi.csv")]) == 2


def test_psi_grid_single_worker_ramp(tmp_path):
    y = np.array([[0.6, 0.8]])
    write_measure(tmp_path / "w.csv", DiscreteMeasure(y, [1.0]), "workers")
    write_measure(tmp_path / "f.csv", DiscreteMeasure([[1.0, 0.5, 0.5], [1.0, 0.2, 0.8]], [1, 1]), "firms")
    out = tmp_path / "r"
    assert main(["solve-dual", "--problem", "wotuk", "--firms", str(tmp_path / "f.csv"),
                 "--workers", str(tmp_path / "w.csv"), "--out-dir", str(out)]) == 0
    phi = read_table(out / "phi.csv")[1][0, 1]
    assert main(["psi-grid", "--run-dir", str(out), "--res", "5", "--radius", "1.6"]) == 0
    _, G = read_table(out / "psi_grid.csv")
    on_ray = G[G[:, 3] == 1]
    # the cone of one worker type is a ray: psi grows linearly along it
    assert len(on_ray) >= 2
    np.testing.assert_allclose(on_ray[:, 2], phi * on_ray[:, 0] / 0.6, rtol=1e-9)
    np.testing.assert_allclose(on_ray[:, 1] * 0.6, on_ray[:, 0] * 0.8, atol=1e-12)


def test_compare(tmp_path, monkeypatch):
    monkeypatch.setenv("WOTKIT_THREADS", "2")
    assert main(["scenario", "--kind", "A", "--n", "5", "--m", "9", "--out-dir", str(tmp_path)]) == 0
    out = tmp_path / "cmp"
    assert main(["compare", "--firms", str(tmp_path / "firms.csv"), "--workers",
                 str(tmp_path / "workers.csv"), "--out-dir", str(out)]) == 0
    s = json.loads((out / "summary.json").read_text())["result"]
    assert set(s) == {"ot", "eot", "wot", "wotuk"}
    assert s["ot"]["support"] <= 5 + 9 - 1
    assert s["eot"]["support"] > s["ot"]["support"]
    assert len(s["wotuk"]["firm_sizes"]) == 5
    for k in s:
        assert read_plan(out / f"plan_{k}.csv").shape == (5, 9)
    monkeypatch.setenv("WOTKIT_THREADS", "many")
    assert main(["compare", "--firms", str(tmp_path / "firms.csv"), "--workers",
                 str(tmp_path / "workers.csv"), "--out-dir", str(out)]) == 2
