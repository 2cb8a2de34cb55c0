import math

import numpy as np
import pytest

from oracles import cube_corners, regular_tetrahedron
from spiralpaths import io
from spiralpaths.errors import DegenerateInput, InvalidMesh, MeshParseError
from spiralpaths.mesh import (
    Polytope,
    circumscribed_ball,
    convex_hull,
    inscribed_ball,
    normalize_to_unit_ball,
)

CUBE = cube_corners(-1.0, 1.0)


def _invariants(poly: Polytope):
    # closed edge-manifold, convex, unit normals
    assert poly.edge_facets.shape == (len(poly.edges), 2)
    assert poly.n_vertices - len(poly.edges) + poly.n_facets == 2
    assert np.allclose(np.linalg.norm(poly.facet_normals, axis=1), 1.0, atol=1e-12)
    gaps = poly.vertices @ poly.facet_normals.T - poly.facet_offsets
    assert gaps.max() <= 1e-9 * poly.scale


def test_cube_hull():
    poly = convex_hull(CUBE)
    assert poly.n_vertices == 8
    assert poly.n_facets == 12
    _invariants(poly)


def test_tetrahedron_hull():
    poly = convex_hull(regular_tetrahedron())
    assert (poly.n_vertices, poly.n_facets) == (4, 4)
    _invariants(poly)


def test_interior_point_dropped():
    poly = convex_hull(np.vstack([CUBE, [[0.0, 0.0, 0.0]]]))
    assert poly.n_vertices == 8
    assert poly.n_facets == 12
    assert not np.any(np.all(poly.vertices == 0.0, axis=1))


def test_coplanar_points_are_degenerate():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [2, 3, 0]], dtype=float)
    with pytest.raises(DegenerateInput):
        convex_hull(pts)


def test_random_hulls_valid():
    rng = np.random.default_rng(1)
    for _ in range(20):
        _invariants(convex_hull(rng.normal(size=(int(rng.integers(4, 30)), 3))))


@pytest.mark.parametrize(
    "scale, expected",
    [(1.0, 1.0), (1.0 / math.sqrt(3.0), 1.0 / math.sqrt(3.0))],
)
def test_inscribed_ball_cube(scale, expected):
    c, r = inscribed_ball(convex_hull(CUBE * scale))
    assert r == pytest.approx(expected, abs=1e-9)
    assert np.allclose(c, 0.0, atol=1e-9)


def test_inscribed_ball_tetrahedron():
    _, r = inscribed_ball(convex_hull(regular_tetrahedron()))
    assert r == pytest.approx(math.sqrt(3.0) / 3.0, abs=1e-9)


@pytest.mark.parametrize(
    "pts, expected",
    [
        (CUBE, math.sqrt(3.0)),
        (regular_tetrahedron(), math.sqrt(3.0)),
        (CUBE * np.array([2.0, 1.0, 1.0]), math.sqrt(6.0)),
    ],
)
def test_circumscribed_ball(pts, expected):
    _, R = circumscribed_ball(convex_hull(pts))
    assert R == pytest.approx(expected, abs=1e-9)


def test_normalize_cube():
    poly = normalize_to_unit_ball(convex_hull(CUBE))
    assert np.allclose(np.linalg.norm(poly.vertices, axis=1), 1.0, atol=1e-9)
    side = min(np.linalg.norm(poly.vertices[i] - poly.vertices[j]) for i, j in poly.edges)
    assert side == pytest.approx(2.0 / math.sqrt(3.0), abs=1e-9)


def test_normalize_idempotent_and_translation_invariant():
    once = normalize_to_unit_ball(convex_hull(CUBE))
    twice = normalize_to_unit_ball(once)
    assert np.allclose(once.vertices, twice.vertices, atol=1e-9)
    moved = normalize_to_unit_ball(convex_hull(CUBE + np.array([5.0, 0.0, 0.0])))
    key = lambda V: np.array(sorted(map(tuple, np.round(V, 9))))
    assert np.allclose(key(moved.vertices), key(once.vertices), atol=1e-9)


def test_from_faces_rejects_open_surface():
    poly = convex_hull(CUBE)
    with pytest.raises(InvalidMesh):
        Polytope.from_faces(poly.vertices, poly.facets[:-1])


def test_from_faces_rejects_nonconvex():
    poly = convex_hull(CUBE)
    V = poly.vertices.copy()
    V[0] *= 0.5  # push a corner inwards
    with pytest.raises(InvalidMesh):
        Polytope.from_faces(V, poly.facets)


def test_off_roundtrip(tmp_path):
    poly = convex_hull(regular_tetrahedron())
    path = io.write_mesh(poly, tmp_path / "t.off")
    back = io.read_mesh(path)
    assert np.array_equal(back.vertices, poly.vertices)
    assert np.array_equal(back.facets, poly.facets)


def test_obj_roundtrip(tmp_path):
    poly = convex_hull(CUBE)
    path = tmp_path / "c.obj"
    path.write_text(io.obj_text(poly))
    back = io.read_mesh(path)
    assert np.array_equal(back.vertices, poly.vertices)


def test_off_quads_are_triangulated(tmp_path):
    text = "OFF\n8 6 0\n" + "\n".join(" ".join(map(str, v)) for v in cube_corners()) + "\n"
    text += "4 0 2 3 1\n4 4 5 7 6\n4 0 1 5 4\n4 2 6 7 3\n4 1 3 7 5\n4 0 4 6 2\n"
    (tmp_path / "q.off").write_text(text)
    poly = io.read_mesh(tmp_path / "q.off")
    assert poly.n_facets == 12


@pytest.mark.parametrize(
    "text",
    ["", "OFF\n", "OFF\n8 6\n0 0\n", "OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 x\n3 0 1 2\n", "OFF\n4 4\n" + "0 0 0\n" * 4 + "3 0 1 9\n" * 4],
)
def test_malformed_off(tmp_path, text):
    (tmp_path / "bad.off").write_text(text)
    with pytest.raises(MeshParseError):
        io.read_mesh(tmp_path / "bad.off")


def test_missing_file(tmp_path):
    with pytest.raises(MeshParseError):
        io.read_mesh(tmp_path / "absent.off")
