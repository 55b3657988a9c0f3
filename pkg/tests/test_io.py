import numpy as np

from ibfsi import io
from ibfsi.body import Shape, discretize
from ibfsi.grid import GridSpec


def test_fmt_is_shortest_round_trip():
    assert io.fmt(0.1) == "0.1"
    assert float(io.fmt(1 / 3)) == 1 / 3
    assert io.fmt(np.int64(7)) == "7"
    assert io.fmt(np.True_) == "true"
    assert io.fmt("abc") == "abc"


def test_csv_round_trip(tmp_path):
    rows = np.random.default_rng(1).standard_normal((5, 3))
    path = io.write_csv(tmp_path / "sub" / "t.csv", ["a", "b", "c"], rows)
    header, data = io.read_csv(path)
    assert header == ["a", "b", "c"]
    assert np.array_equal(data, rows)
    io.write_csv(tmp_path / "empty.csv", ["a"], [])
    assert io.read_csv(tmp_path / "empty.csv")[1].shape == (0, 1)


def test_flatten_record():
    rec = {"force": np.array([1.0, 2.0]), "slip": 0.5, "name": "x", "big": np.zeros(5)}
    assert io.flatten_record("b0_", rec) == {"b0_force_x": 1.0, "b0_force_y": 2.0, "b0_slip": 0.5}


def test_time_series_fixes_columns_on_the_first_row(tmp_path):
    ts = io.TimeSeries()
    ts.append({"t": 0.0, "ke": 1.0})
    ts.append({"t": 0.1, "extra": 3.0})
    assert ts.header == ["t", "ke"]
    assert np.isnan(ts.column("ke")[1])
    header, data = io.read_csv(ts.write(tmp_path / "ts.csv"))
    assert header == ["t", "ke"] and data.shape == (2, 2)


def test_vtk_snapshot_layout(tmp_path):
    g = GridSpec.box(5, 4, 1.25, 1.0)
    p = np.arange(20.0).reshape(5, 4)
    path = io.write_vtk(tmp_path / "s.vtk", g, {"p": p}, {"u": g.zeros_face()})
    lines = path.read_text().splitlines()
    assert lines[4] == "DIMENSIONS 6 5 1"
    assert lines[7] == "CELL_DATA 20"
    i = lines.index("SCALARS p double 1") + 2
    # x varies fastest
    assert [float(v) for v in lines[i:i + 5]] == list(p[:, 0])
    assert lines[-1] == "0.0 0.0 0"


def test_marker_dump(tmp_path):
    m = discretize(Shape.disc(0.3), 0.05, "surface")
    header, data = io.read_csv(io.write_markers(tmp_path / "m.csv", m))
    assert header == ["id", "x", "y", "rx", "ry", "dV"]
    assert np.array_equal(data[:, 1:3], m.X)
