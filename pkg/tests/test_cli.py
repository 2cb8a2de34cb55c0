import csv
import hashlib
import json
import math

import pytest

from oracles import cube_corners
from spiralpaths import io
from spiralpaths.cli import main
from spiralpaths.mesh import convex_hull


@pytest.fixture()
def cube_off(tmp_path):
    path = tmp_path / "cube.off"
    io.write_mesh(convex_hull(cube_corners()), path)
    return path


def _config(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _run(*argv):
    return main([str(a) for a in argv])


def _digest(folder):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(folder.iterdir())}


def test_geodesic_cube_corners(tmp_path, cube_off):
    cfg = _config(tmp_path, "g.json", {"a": [0, 0, 0], "b": [1, 1, 1]})
    out = tmp_path / "out"
    assert _run("geodesic", "--mesh", cube_off, "--config", cfg, "--out-dir", out) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["length"] == pytest.approx(math.sqrt(5), abs=1e-9)
    assert (out / "path.obj").exists()
    run = json.loads((out / "run.json").read_text())
    assert run["command"] == "geodesic"
    assert run["flags"] == {"certified": True}


def test_geodesic_same_face(tmp_path, cube_off):
    cfg = _config(tmp_path, "g.json", {"a": [0.2, 0.2, 0], "b": [0.8, 0.5, 0]})
    assert _run("geodesic", "--mesh", cube_off, "--config", cfg, "--out-dir", tmp_path / "o") == 0
    assert json.loads((tmp_path / "o" / "metrics.json").read_text())["t"] == 0.0


def test_geodesic_vertex_points(tmp_path, cube_off):
    cfg = _config(tmp_path, "g.json", {"a": {"vertex": 0}, "b": {"vertex": 7}})
    assert _run("geodesic", "--mesh", cube_off, "--config", cfg, "--out-dir", tmp_path / "o") == 0


def test_malformed_mesh_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.off"
    bad.write_text("OFF\n8 6\n0 0\n")
    assert _run("geodesic", "--mesh", bad, "--out-dir", tmp_path / "o") == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "MeshParse"


def test_point_off_surface_exit_2(tmp_path, cube_off, capsys):
    cfg = _config(tmp_path, "g.json", {"a": [0.5, 0.5, 0.5], "b": [1, 1, 1]})
    assert _run("geodesic", "--mesh", cube_off, "--config", cfg, "--out-dir", tmp_path / "o") == 2
    assert json.loads(capsys.readouterr().err)["error"] == "InvalidParams"


def test_unknown_command_exit_2(capsys):
    assert _run("frobnicate") == 2


def test_hull_from_points(tmp_path):
    cfg = _config(tmp_path, "h.json", {"points": cube_corners(-1, 1).tolist() + [[0, 0, 0]]})
    assert _run("hull", "--config", cfg, "--out-dir", tmp_path / "o") == 0
    res = json.loads((tmp_path / "o" / "hull.json").read_text())
    assert res["n_vertices"] == 8
    assert res["r"] == pytest.approx(1.0)
    assert res["R"] == pytest.approx(math.sqrt(3))


def test_curvature_polygon(tmp_path):
    cfg = _config(tmp_path, "c.json", {"polygon": [[0, 0, 0], [1, 0, 0], [1, 1, 1], [0, 1, 0]]})
    assert _run("curvature", "--config", cfg, "--out-dir", tmp_path / "o") == 0
    res = json.loads((tmp_path / "o" / "curvature.json").read_text())
    assert res["t"] > 2 * math.pi


def test_export_obj_reloads(tmp_path, cube_off):
    assert _run("export-obj", "--mesh", cube_off, "--out-dir", tmp_path / "o") == 0
    poly = io.read_mesh(tmp_path / "o" / "cube.obj")
    assert poly.n_vertices == 8


def test_sweep_empty(tmp_path):
    assert _run("theorem2-sweep", "--trials", 0, "--out-dir", tmp_path / "o") == 0
    text = (tmp_path / "o" / "sweep.csv").read_text()
    assert text.strip() == "trial,r,R,length,t,bound,k,pass"


def test_sweep_cube_row(tmp_path, cube_off):
    cfg = _config(tmp_path, "s.json", {"paths_per_trial": 3})
    assert _run("theorem2-sweep", "--mesh", cube_off, "--config", cfg, "--trials", 1, "--out-dir", tmp_path / "o") == 0
    rows = list(csv.DictReader((tmp_path / "o" / "sweep.csv").open()))
    assert len(rows) == 1
    assert float(rows[0]["r"]) == pytest.approx(1 / math.sqrt(3))
    assert float(rows[0]["bound"]) == pytest.approx(12 * math.pi**2, abs=1e-6)
    assert rows[0]["pass"] == "True"


def test_sweep_deterministic(tmp_path):
    cfg = _config(tmp_path, "s.json", {"paths_per_trial": 2})
    for name in ("a", "b"):
        assert _run("theorem2-sweep", "--config", cfg, "--trials", 2, "--seed", 7, "--out-dir", tmp_path / name) == 0
    assert _digest(tmp_path / "a") == _digest(tmp_path / "b")


def test_sweep_bad_range(tmp_path):
    cfg = _config(tmp_path, "s.json", {"r_min": 0.5, "r_max": 1.5})
    assert _run("theorem2-sweep", "--config", cfg, "--out-dir", tmp_path / "o") == 2


def test_spiral_alternate(tmp_path):
    cfg = _config(tmp_path, "s.json", {"n_triangles": 6, "turn": "alternate"})
    assert _run("spiral", "--config", cfg, "--out-dir", tmp_path / "o") == 0
    rep = json.loads((tmp_path / "o" / "spiral.json").read_text())
    d = rep["level_dphi"]
    assert all(d[k] * d[k + 1] < 0 for k in range(len(d) - 1))
    assert io.read_mesh(tmp_path / "o" / "tower.off").n_facets > 0


def test_spiral_ten_levels(tmp_path):
    cfg = _config(tmp_path, "s.json", {"n_triangles": 10})
    assert _run("spiral", "--config", cfg, "--out-dir", tmp_path / "o", "--json") == 0
    rep = json.loads((tmp_path / "o" / "spiral.json").read_text())
    assert rep["s"] >= 2.5


def test_spiral_unknown_field(tmp_path, capsys):
    cfg = _config(tmp_path, "s.json", {"n_triangles": 3, "colour": "red"})
    assert _run("spiral", "--config", cfg, "--out-dir", tmp_path / "o") == 2


def test_delta_cones_off(tmp_path):
    p = {"alpha": 0.05, "g": 400, "eps": 0.056, "n_samples": 100, "n_columns": 40, "n_arc": 40, "lprime_bulge": 0.2}
    cfg = _config(tmp_path, "d.json", {"evaluate": p})
    assert _run("delta-search", "--config", cfg, "--out-dir", tmp_path / "o") == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["t_bar"] == pytest.approx(2 * (math.pi - 0.05), abs=1e-2)
    assert io.read_mesh(tmp_path / "o" / "delta.off").n_facets > 0


def test_delta_search_small_budget(tmp_path):
    cfg = _config(tmp_path, "d.json", {"verify": False})
    assert _run("delta-search", "--config", cfg, "--trials", 3, "--out-dir", tmp_path / "o") == 0
    res = json.loads((tmp_path / "o" / "search.json").read_text())
    assert res["evaluations"] == 3
    assert len(res["trace"]) == 3
    assert res["best_probe"]["beta"] > 0
