import math

import numpy as np
import pytest

from oracles import cube_corners
from spiralpaths.errors import AxisDegenerate, DegenerateSegment, NotNormalized
from spiralpaths.geodesic import locate, shortest_path
from spiralpaths.mesh import convex_hull, normalize_to_unit_ball
from spiralpaths.metrics import (
    closed_total_curvature,
    csv_rows,
    lemma1_certificate,
    path_report,
    spiralling_number,
    theorem2_audit,
    total_curvature,
    turning_data,
)

XI_CUBE = math.acos(0.2)


@pytest.fixture(scope="module")
def cube():
    return convex_hull(cube_corners())


def _diag(cube):
    a = locate(cube, [0.0, 0.0, 0.0])
    b = locate(cube, [1.0, 1.0, 1.0])
    return shortest_path(cube, a, b)


def test_collinear_path():
    td = turning_data(np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float))
    assert np.allclose(td.turn_angles, [0.0])
    assert total_curvature(td) == 0.0


def test_right_angle():
    td = turning_data(np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0]], dtype=float))
    assert td.turn_angles[0] == pytest.approx(math.pi / 2, abs=1e-15)
    assert total_curvature(td) == pytest.approx(math.pi / 2, abs=1e-15)


def test_repeated_point_rejected():
    with pytest.raises(DegenerateSegment):
        turning_data(np.array([[0, 0, 0], [1, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float))


def test_cube_diagonal_turn(cube):
    path = _diag(cube)
    td = turning_data(path, cube)
    assert len(td.turn_angles) == 1
    assert td.turn_angles[0] == pytest.approx(XI_CUBE, abs=1e-12)
    assert np.allclose(np.linalg.norm(td.directions, axis=1), 1.0, atol=1e-12)
    # the geodesic crosses its edge at the midpoint
    mid = td.corners[1]
    assert sorted(np.round(mid, 12)).count(0.5) == 1
    assert np.all(td.lambda_residuals <= 1e-8)
    # one right-angle fold: gamma = angle between the two normals
    assert td.gamma_sum == pytest.approx(math.pi / 2, abs=1e-12)


def test_same_facet_path_is_straight(cube):
    path = shortest_path(cube, locate(cube, [0.2, 0.2, 0]), locate(cube, [0.8, 0.5, 0]))
    assert total_curvature(turning_data(path, cube)) == 0.0


@pytest.mark.parametrize("n", [4, 6])
def test_planar_convex_polygon(n):
    th = 2 * math.pi * np.arange(n) / n
    pts = np.column_stack([np.cos(th), np.sin(th), np.zeros(n)])
    assert closed_total_curvature(pts) == pytest.approx(2 * math.pi, abs=1e-12)


def test_skew_quadrilateral():
    pts = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 1], [0, 1, 0]], dtype=float)
    assert closed_total_curvature(pts) > 2 * math.pi + 1e-6


def _helix(turns=2, per_turn=8, reverse=False):
    n = turns * per_turn
    th = 2 * math.pi * np.arange(n + 1) / per_turn
    z = 0.05 + 0.9 * np.arange(n + 1) / n
    ring = np.column_stack([np.cos(th), np.sin(th), z])
    pts = np.vstack([[0, 0, 0], ring, [0, 0, 1]])
    return pts[::-1] if reverse else pts


def test_helix_two_turns():
    rep = spiralling_number(_helix(), [0, 0, 0], [0, 0, 1])
    assert rep.s == pytest.approx(2.0, abs=1e-9)


def test_helix_reverse_same_s():
    rep = spiralling_number(_helix(reverse=True), [0, 0, 1], [0, 0, 0])
    assert rep.s == pytest.approx(2.0, abs=1e-9)


def test_half_plane_path_has_no_spiral():
    pts = np.array([[0, 0, 0], [1, 0, 0.2], [2, 0, 0.5], [0.5, 0, 0.9], [0, 0, 1]], dtype=float)
    assert spiralling_number(pts, [0, 0, 0], [0, 0, 1]).s == 0.0


def test_axis_degenerate():
    with pytest.raises(AxisDegenerate):
        spiralling_number(_helix(), [0, 0, 0], [0, 0, 0])


def test_lemma1_single_normal():
    c = lemma1_certificate(np.array([[0.0, 0.0, 1.0]]))
    assert np.allclose(c.v, [0, 0, 1])
    assert c.eta == pytest.approx(1.0)
    assert c.bound == pytest.approx(math.pi)


def test_lemma1_two_normals():
    c = lemma1_certificate(np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]))
    assert np.allclose(c.v, np.array([1, 0, 1]) / math.sqrt(2), atol=1e-12)
    assert c.eta == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    assert c.bound == pytest.approx(math.pi * math.sqrt(2), abs=1e-12)


def test_lemma1_opposite_normals():
    c = lemma1_certificate(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]))
    assert c.eta <= 0
    assert c.bound == math.inf


def test_lemma1_holds_on_cube_geodesic(cube):
    td = turning_data(_diag(cube), cube)
    c = lemma1_certificate(td)
    assert total_curvature(td) < c.bound


def test_theorem2_audit_cube():
    poly = normalize_to_unit_ball(convex_hull(cube_corners(-1, 1)))
    a = locate(poly, poly.vertices[0])
    b = locate(poly, -poly.vertices[0])
    rep = theorem2_audit(poly, shortest_path(poly, a, b))
    assert rep.bound == pytest.approx(12 * math.pi**2, abs=1e-6)
    assert rep.passed, rep.flags
    assert rep.min_shadow_ratio > -1e-8


def test_theorem2_audit_single_facet():
    poly = normalize_to_unit_ball(convex_hull(cube_corners(-1, 1)))
    f = poly.facets[0]
    V = poly.vertices
    a = locate(poly, 0.6 * V[f[0]] + 0.2 * V[f[1]] + 0.2 * V[f[2]])
    b = locate(poly, 0.2 * V[f[0]] + 0.6 * V[f[1]] + 0.2 * V[f[2]])
    rep = theorem2_audit(poly, shortest_path(poly, a, b))
    assert rep.total_curvature == 0.0
    assert rep.passed


def test_theorem2_requires_normalized(cube):
    with pytest.raises(NotNormalized):
        theorem2_audit(cube, _diag(cube))


def test_path_report_fields(cube):
    rep = path_report(cube, _diag(cube), audit=False)
    assert rep["length"] == pytest.approx(math.sqrt(5))
    assert rep["t"] == pytest.approx(XI_CUBE)
    assert rep["schema"].startswith("spiralpaths.metrics/")
    assert rep["lemma1"]["eta"] > 0


def test_csv_header_only():
    assert csv_rows([]).strip() == "trial,r,R,length,t,bound,k,pass"
