import json

import numpy as np
import pytest

from swdg.config import ConfigError, parse_config
from swdg.dg import nodal_field
from swdg.driver import run
from swdg.output import (Gauges, extract_cross_section, read_csv, read_snapshot,
                         write_cross_section, write_snapshot)


# ---------------------------------------------------------------- config

def test_minimal_config_defaults():
    cfg = parse_config(text="scenario = thacker_planar\n")
    assert cfg.g == 9.80616
    assert cfg.tol_wet == 1e-3
    assert cfg.limiter == "vertex" and cfg.form == "strong"
    assert cfg.dt is not None and cfg.cfl is None


def test_config_comments_overrides_and_roundtrip():
    text = """
    # planar test
    scenario = thacker_planar   # trailing comment
    scenario.periods = 0.5
    mesh.nx = 8
    mesh.ny = 8
    section.mid = y = 0.0, 4
    """
    cfg = parse_config(text=text, overrides=["limiter=edge", "form=weak"])
    assert cfg.limiter == "edge" and cfg.form == "weak"
    assert cfg.scenario_params == {"periods": 0.5}
    assert cfg.mesh == {"nx": 8, "ny": 8}
    assert cfg.sections[0].axis == "y" and cfg.sections[0].samples == 4
    again = parse_config(text="\n".join(f"{k} = {v}" for k, v in cfg.to_pairs()))
    assert again == cfg


@pytest.mark.parametrize("text, key", [
    ("scenario = thacker_planar\ndt = 0.1\ncfl = 0.2", "cfl"),
    ("scenario = thacker_planar\nlimter = edge", "limter"),
    ("scenario = thacker_planar\nlimiter = face", "limiter"),
    ("scenario = thacker_planar\ntol_wet = 0", "tol_wet"),
    ("scenario = thacker_planar\ntol_wet = -1e-3", "tol_wet"),
    ("scenario = thacker_planar\ngauge.g1 = 5.0, 0.0", "gauge.g1"),
    ("scenario = thacker_planar\ndiagnostic_interval = 0", "diagnostic_interval"),
    ("scenario = nowhere", "scenario"),
    ("form = weak", "scenario"),
    ("scenario thacker_planar", "expected"),
])
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigError, match=key):
        parse_config(text=text)


def test_conical_gets_default_gauges():
    cfg = parse_config(text="scenario = conical_island")
    assert len(cfg.gauges) > 0


# ---------------------------------------------------------------- snapshots

def _two_cell_field(mesh):
    x, y = mesh.vertices.T
    return nodal_field(mesh, 1.0 + x / 3.0, 0.1 * y, -np.pi * x)


def test_snapshot_csv_rows_and_roundtrip(square2, tmp_path):
    U = _two_cell_field(square2)
    b = np.array([0.0, 0.1, 0.2, 0.3])
    p = write_snapshot(U, b, square2, 0.5, tmp_path / "s.csv")
    lines = p.read_text().splitlines()
    assert len(lines) == 7
    assert lines[0] == "cell,node,x,y,b,h,hu,hv,u,v,wet"
    d = read_snapshot(p)
    assert np.array_equal(d["h"], U[0].ravel())
    assert np.array_equal(d["hu"], U[1].ravel())
    assert np.array_equal(d["hv"], U[2].ravel())
    assert np.array_equal(d["b"], b[square2.cells].ravel())
    assert np.all(d["wet"] == 1)


def test_snapshot_vtk_layout(square2, tmp_path):
    U = _two_cell_field(square2)
    p = write_snapshot(U, np.zeros(4), square2, 1.25, tmp_path / "s.vtk", fmt="vtk")
    text = p.read_text().splitlines()
    assert text[0].startswith("# vtk DataFile")
    assert f"POINTS {3 * square2.n_cells} double" in text
    assert f"CELLS {square2.n_cells} {4 * square2.n_cells}" in text
    assert "POINT_DATA 6" in text
    i = text.index("SCALARS h double 1")
    assert np.array_equal([float(v) for v in text[i + 2:i + 8]], U[0].ravel())
    with pytest.raises(ValueError):
        write_snapshot(U, np.zeros(4), square2, 0.0, tmp_path / "s.x", fmt="png")


# ---------------------------------------------------------------- cross-sections

def test_section_constant_field(periodic8):
    U = nodal_field(periodic8, np.full(periodic8.n_vertices, 0.7))
    tr = extract_cross_section(U, periodic8, ("y", 0.3))
    assert len(tr["s"]) > 0
    assert np.abs(tr["h"] - 0.7).max() <= 1e-15
    assert np.all(np.diff(tr["s"]) >= 0)
    assert tr["s"][0] == 0.0 and tr["s"][-1] == 1.0


def test_section_linear_field_is_exact(periodic8):
    # not periodic in x, but sampling inside each cell only uses that cell
    x = periodic8.node_coords[..., 0]
    U = np.zeros((3, periodic8.n_cells, 3))
    U[0] = x
    for axis, val in (("y", 0.0), ("y", 0.41)):
        tr = extract_cross_section(U, periodic8, (axis, val), samples=5)
        assert np.abs(tr["h"] - tr["x"]).max() <= 1e-14
    tr = extract_cross_section(U, periodic8, ("x", 0.55))
    assert np.abs(tr["h"] - 0.55).max() <= 1e-14


def test_section_shows_both_sides_of_a_jump(square2):
    # cells share the diagonal; a vertical line crosses it at one point
    U = np.zeros((3, 2, 3))
    U[0, 0] = 1.0
    U[0, 1] = 2.0
    tr = extract_cross_section(U, square2, ("x", 0.5))
    assert set(tr["cell"]) == {0, 1}
    s_edge = tr["exit"][tr["cell"] == tr["cell"][0]][0]
    at = np.isclose(tr["s"], s_edge)
    assert sorted(tr["h"][at]) == [1.0, 2.0]


def test_section_outside_warns(periodic8, tmp_path):
    U = np.ones((3, periodic8.n_cells, 3))
    with pytest.warns(RuntimeWarning):
        tr = extract_cross_section(U, periodic8, ("y", 3.0))
    assert len(tr["s"]) == 0
    write_cross_section(tr, tmp_path / "empty.csv")
    assert (tmp_path / "empty.csv").read_text().count("\n") == 1


def test_gauge_on_shared_edge_uses_lowest_cell(square2):
    g = Gauges(square2, {"mid": (0.5, 0.5), "corner": (0.0, 0.0)})
    assert g.cells[0] == 0
    U = _two_cell_field(square2)
    s = g.sample(U, np.zeros((2, 3)))
    assert np.isclose(s["h"][0], 1.0 + 0.5 / 3.0)
    with pytest.raises(ValueError):
        Gauges(square2, {"far": (2.0, 0.0)})


# ---------------------------------------------------------------- driver

def _run(tmp_path, name, text, overrides=()):
    cfg = parse_config(text=text, overrides=[f"output={tmp_path / name}", *overrides])
    rc = run(cfg)
    return rc, tmp_path / name


def test_lake_at_rest_diagnostics(tmp_path):
    rc, out = _run(tmp_path, "lake", """
        scenario = lake_at_rest_1
        mesh.nx = 16
        mesh.ny = 16
        max_steps = 500
        diagnostic_interval = 10
        gauge.p = 0.3, 0.6
        """)
    assert rc == 0
    d = read_csv(out / "diagnostics.csv")
    assert d["step"][-1] == 500
    assert np.all(d["linf_h"] < 1e-12)
    assert np.all(d["min_h"] >= 0) and np.all(d["min_stage_h"] >= 0)
    for col in ("time", "mass", "energy", "max_courant", "dt", "n_gravity_off"):
        assert col in d
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "ok" and man["steps"] == 500


def test_thacker_planar_mass_drift(tmp_path):
    rc, out = _run(tmp_path, "planar", """
        scenario = thacker_planar
        scenario.nx = 16
        diagnostic_interval = 25
        """)
    assert rc == 0
    d = read_csv(out / "diagnostics.csv")
    assert np.max(np.abs(d["mass_drift"])) <= 1e-12
    man = json.loads((out / "manifest.json").read_text())
    assert np.isclose(man["t_final"], man["config"]["t_end"])


def test_limiter_override_reaches_the_solver(tmp_path):
    text = """
        scenario = thacker_planar
        scenario.nx = 8
        max_steps = 40
        """
    _, a = _run(tmp_path, "v", text)
    _, b = _run(tmp_path, "e", text, ["limiter=edge"])
    assert json.loads((b / "manifest.json").read_text())["config"]["limiter"] == "edge"
    ea = read_csv(a / "diagnostics.csv")["l2_h"][-1]
    eb = read_csv(b / "diagnostics.csv")["l2_h"][-1]
    assert ea != eb


def test_rerun_and_manifest_replay_are_identical(tmp_path):
    text = """
        scenario = thacker_radial
        scenario.nx = 8
        cfl = 0.2
        max_steps = 30
        snapshot_interval = 10
        gauge.c = 0.0, 0.0
        gauge.e = 1500.0, -200.0
        section.axis = y = 0.0
        """
    _, a = _run(tmp_path, "a", text)
    _, b = _run(tmp_path, "b", text)
    assert (a / "gauges.csv").read_bytes() == (b / "gauges.csv").read_bytes()
    cfg = parse_config(a / "manifest.json", [f"output={tmp_path / 'c'}"])
    assert run(cfg) == 0
    man = json.loads((a / "manifest.json").read_text())
    assert "snapshot_000030.csv" in man["outputs"]
    assert "section_axis_000010.csv" in man["outputs"]
    for name in man["outputs"]:
        assert (a / name).read_bytes() == (tmp_path / "c" / name).read_bytes(), name
    g = read_csv(a / "gauges.csv")
    t = g["time"][g["gauge"] == "c"]
    assert np.all(np.diff(t) > 0)


def test_abort_sets_status(tmp_path):
    rc, out = _run(tmp_path, "abort", """
        scenario = thacker_radial
        scenario.nx = 8
        dt = 500
        max_steps = 5
        """)
    assert rc == 3
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "aborted" and man["reason"] == "positivity"
    assert man["message"]


def test_vtk_snapshots_from_driver(tmp_path):
    rc, out = _run(tmp_path, "vtk", """
        scenario = lake_at_rest_2
        mesh.nx = 4
        mesh.ny = 4
        max_steps = 3
        snapshot_format = vtk
        """)
    assert rc == 0
    assert (out / "snapshot_000000.vtk").exists() and (out / "snapshot_000003.vtk").exists()
    assert list(read_csv(out / "diagnostics.csv")["step"]) == [0, 1, 2, 3]


def test_shipped_configs_parse():
    from pathlib import Path
    paths = sorted((Path(__file__).parents[1] / "configs").glob("*.cfg"))
    assert len(paths) >= 5
    for p in paths:
        cfg = parse_config(p)
        cfg.build_scenario()
