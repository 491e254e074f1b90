import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wotkit.io import (
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
from wotkit.labor_market import make_scenario
from wotkit.measures import DiscreteMeasure

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=finite))
def test_plan_round_trip_bit_stable(tmp_path_factory, M):
    path = tmp_path_factory.mktemp("plan") / "plan.csv"
    write_plan(path, M)
    back = read_plan(path)
    assert back.tobytes() == M.astype(float).tobytes()


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 3)), elements=finite),
       st.data())
def test_measure_round_trip_bit_stable(tmp_path_factory, pts, data):
    w = data.draw(arrays(np.float64, len(pts), elements=st.floats(1e-3, 1e3)))
    m = DiscreteMeasure(pts, w)
    path = tmp_path_factory.mktemp("m") / "m.csv"
    write_measure(path, m)
    back = read_measure(path)
    assert back.points.tobytes() == m.points.tobytes()
    # weights are renormalized again on read, which may move the last bit
    np.testing.assert_allclose(back.weights, m.weights, rtol=1e-15, atol=0)


def test_firm_and_worker_layouts(tmp_path):
    firms, workers = make_scenario("A", 3, 4)
    write_measure(tmp_path / "f.csv", firms, "firms", comment="provenance")
    write_measure(tmp_path / "w.csv", workers, "workers")
    text = (tmp_path / "f.csv").read_text().splitlines()
    assert text[0] == "# provenance" and text[1] == "z,alpha1,alpha2,weight"
    assert (tmp_path / "w.csv").read_text().splitlines()[0] == "x1,x2,weight"
    np.testing.assert_array_equal(read_measure(tmp_path / "f.csv").points, firms.points)
    with pytest.raises(ValueError):
        write_measure(tmp_path / "bad.csv", workers, "firms")


def test_unnormalized_csv_weights(tmp_path):
    (tmp_path / "w.csv").write_text("x1,x2,weight\n1,0,3\n0,1,1\n")
    np.testing.assert_allclose(read_measure(tmp_path / "w.csv").weights, [0.75, 0.25])


def test_read_errors_name_the_path(tmp_path):
    missing = tmp_path / "nope.csv"
    with pytest.raises(InputError, match="nope.csv"):
        read_measure(missing)
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(InputError, match="weight"):
        read_measure(tmp_path / "bad.csv")
    (tmp_path / "zero.csv").write_text("c1,weight\n1,0\n")
    with pytest.raises(InputError, match="zero.csv"):
        read_measure(tmp_path / "zero.csv")
    (tmp_path / "text.csv").write_text("c1,weight\nx,1\n")
    with pytest.raises(InputError):
        read_table(tmp_path / "text.csv")
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(InputError):
        read_table(tmp_path / "empty.csv")
    (tmp_path / "plan.csv").write_text("1,0\n0.5,0.5\n")
    with pytest.raises(InputError):
        read_plan(tmp_path / "plan.csv")
    with pytest.raises(InputError, match="nope.json"):
        read_json(tmp_path / "nope.json")


def test_trace_and_table(tmp_path):
    write_trace(tmp_path / "t.csv", [(0, 1.5, 0.25), (10, 1.75, 0.0)])
    assert (tmp_path / "t.csv").read_text() == "iter,objective,ugap\n0,1.5,0.25\n10,1.75,0.0\n"
    write_table(tmp_path / "g.csv", ("x", "ok"), [[0.1, 0.2], np.array([True, False])])
    assert (tmp_path / "g.csv").read_text().splitlines()[1:] == ["0.1,1", "0.2,0"]
    with pytest.raises(ValueError):
        write_table(tmp_path / "h.csv", ("x",), [[1.0], [2.0]])


def test_json_round_trip(tmp_path):
    obj = {"a": np.float64(1.5), "b": np.arange(3), "c": {"d": np.int64(2)}}
    write_json(tmp_path / "r.json", obj)
    assert read_json(tmp_path / "r.json") == {"a": 1.5, "b": [0, 1, 2], "c": {"d": 2}}
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(InputError, match="invalid JSON"):
        read_json(tmp_path / "bad.json")
