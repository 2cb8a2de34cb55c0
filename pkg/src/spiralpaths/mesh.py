"""Convex polytopes as closed, outward-oriented triangle surfaces.

A :class:`Polytope` stores vertex coordinates, triangular facets, unit outer
facet normals and the edge/facet incidence needed by the geodesic code.
Hulls are computed with qhull (through :mod:`scipy.spatial`) and then
re-triangulated face by face, so that no zero-area triangles survive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateInput, InvalidMesh, SolverFailure

TOL_CONVEX = 1e-9
TOL_COPLANAR = 1e-9
TOL_BALL = 1e-9
TOL_LP = 1e-9


@dataclass(frozen=True, eq=False)
class Polytope:
    """Closed convex triangulated surface.

    Attributes
    ----------
    vertices : (n, 3) float array
    facets : (m, 3) int array
        Vertex triples, counter-clockwise when seen from outside.
    facet_normals : (m, 3) float array
        Unit outer normals.
    facet_offsets : (m,) float array
        ``d`` in the facet plane ``n . x = d``.
    edges : (e, 2) int array
        Undirected edges, smaller vertex index first.
    edge_facets : (e, 2) int array
        The two facets incident to each edge.
    facet_edges : (m, 3) int array
        ``facet_edges[f, k]`` is the edge opposite to ``facets[f, k]``.
    hp_vertices : tuple, optional
        High precision copy of the coordinates (mpmath numbers). Geodesic
        queries use it instead of ``vertices`` when present.
    """

    vertices: np.ndarray
    facets: np.ndarray
    facet_normals: np.ndarray
    facet_offsets: np.ndarray
    edges: np.ndarray
    edge_facets: np.ndarray
    facet_edges: np.ndarray
    edge_index: dict = field(repr=False)
    hp_vertices: tuple | None = field(default=None, repr=False)
    source_ids: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_faces(cls, vertices, facets, hp_vertices=None, *, check=True, source_ids=None):
        """Build from raw arrays, fixing orientation and deriving adjacency.

        Raises :class:`InvalidMesh` when the surface is not a closed
        edge-manifold or (with ``check``) not convex.
        """
        V = np.array(vertices, dtype=float)
        F = np.array(facets, dtype=np.int64).reshape(-1, 3)
        if V.ndim != 2 or V.shape[1] != 3 or len(V) < 4:
            raise InvalidMesh("need at least four 3D vertices")
        if len(F) < 4 or F.min() < 0 or F.max() >= len(V):
            raise InvalidMesh("facet indices out of range")
        if not np.all(np.isfinite(V)):
            raise InvalidMesh("non-finite coordinates")

        inside = V[np.unique(F)].mean(axis=0)
        cross = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
        norms = np.linalg.norm(cross, axis=1)
        if np.any(norms == 0.0):
            raise InvalidMesh("zero-area facet")
        flip = np.einsum("ij,ij->i", cross, V[F[:, 0]] - inside) < 0
        F = F.copy()
        F[flip] = F[flip][:, [0, 2, 1]]
        cross[flip] *= -1
        normals = cross / norms[:, None]
        offsets = np.einsum("ij,ij->i", normals, V[F[:, 0]])

        edge_index: dict[tuple[int, int], int] = {}
        edge_facets: list[list[int]] = []
        facet_edges = np.empty_like(F)
        for f, tri in enumerate(F.tolist()):
            for k in range(3):
                i, j = tri[(k + 1) % 3], tri[(k + 2) % 3]
                key = (i, j) if i < j else (j, i)
                e = edge_index.get(key)
                if e is None:
                    e = edge_index[key] = len(edge_facets)
                    edge_facets.append([])
                edge_facets[e].append(f)
                facet_edges[f, k] = e
        if any(len(fs) != 2 for fs in edge_facets):
            raise InvalidMesh("surface is not a closed edge-manifold")

        poly = cls(
            vertices=V,
            facets=F,
            facet_normals=normals,
            facet_offsets=offsets,
            edges=np.array(list(edge_index), dtype=np.int64),
            edge_facets=np.array(edge_facets, dtype=np.int64),
            facet_edges=facet_edges,
            edge_index=edge_index,
            hp_vertices=hp_vertices,
            source_ids=source_ids,
        )
        if check:
            excess = poly.convexity_excess()
            if excess > TOL_CONVEX * poly.scale:
                raise InvalidMesh(f"not convex: vertex {excess:.3g} outside a facet plane")
        return poly

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @property
    def diameter(self) -> float:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    @property
    def scale(self) -> float:
        """Multiplier applied to absolute tolerances."""
        return max(1.0, self.diameter)

    def convexity_excess(self) -> float:
        """max over (facet, vertex) of ``n . v - d``; <= 0 for a convex body.

        See :meth:`plane_excess` for the rounding credit.
        """
        return self.plane_excess(self.vertices)

    def plane_excess(self, points) -> float:
        """max over (facet, point) of ``n . p - d``.

        Each facet is credited with the rounding error of its own normal
        (relative error of the cross product times the body diameter), so
        tiny facets far from the origin do not report spurious excess.
        """
        X = np.asarray(points, dtype=float)
        V, F = self.vertices, self.facets
        a, b, c = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
        emax = np.max([np.linalg.norm(b - a, axis=1), np.linalg.norm(c - b, axis=1), np.linalg.norm(a - c, axis=1)], axis=0)
        cross = np.linalg.norm(np.cross(b - a, c - a), axis=1)
        nerr = 4 * np.finfo(float).eps * max(np.abs(V).max(), np.abs(X).max()) * emax / cross
        slack = nerr * self.diameter
        worst = -np.inf
        for chunk in np.array_split(np.arange(self.n_facets), max(1, self.n_facets // 512)):
            d = X @ self.facet_normals[chunk].T - self.facet_offsets[chunk] - slack[chunk]
            worst = max(worst, float(d.max()))
        return worst

    def edge_dihedral(self) -> np.ndarray:
        """Angle between the outer normals of the two facets at each edge."""
        n0 = self.facet_normals[self.edge_facets[:, 0]]
        n1 = self.facet_normals[self.edge_facets[:, 1]]
        cross = np.linalg.norm(np.cross(n0, n1), axis=1)
        return np.arctan2(cross, np.einsum("ij,ij->i", n0, n1))

    def coplanar_edges(self, tol: float = TOL_COPLANAR) -> np.ndarray:
        return self.edge_dihedral() < tol

    def edge_id(self, i: int, j: int) -> int:
        return self.edge_index[(i, j) if i < j else (j, i)]

    def other_facet(self, edge: int, facet: int) -> int:
        f0, f1 = self.edge_facets[edge]
        return int(f1 if f0 == facet else f0)

    def vertex_facets(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for f, tri in enumerate(self.facets.tolist()):
            for v in tri:
                out[v].append(f)
        return out

    def support(self, directions) -> np.ndarray:
        """Support function ``h(u) = max_v u . v`` for each row of ``directions``."""
        return (np.asarray(directions, dtype=float) @ self.vertices.T).max(axis=1)

    def transformed(self, scale=1.0, shift=(0.0, 0.0, 0.0)) -> Polytope:
        """``scale * (x + shift)`` applied to every vertex."""
        shift = np.asarray(shift, dtype=float)
        hp = None
        if self.hp_vertices is not None:
            import mpmath

            s = mpmath.mpf(scale)
            t = [mpmath.mpf(float(c)) for c in shift]
            hp = tuple(tuple(s * (p[k] + t[k]) for k in range(3)) for p in self.hp_vertices)
        return Polytope.from_faces(scale * (self.vertices + shift), self.facets, hp, check=False)


@dataclass(frozen=True)
class BallData:
    in_center: np.ndarray
    r: float
    out_center: np.ndarray
    R: float


def _polygon_corners(pts2d: np.ndarray, tol: float) -> list[int]:
    """Strict corners of the convex hull of ``pts2d`` in counter-clockwise order.

    A point is dropped when the turn it makes has sine at most ``tol``.
    """
    order = sorted(range(len(pts2d)), key=lambda i: (pts2d[i, 0], pts2d[i, 1]))

    def cross(o, a, b):
        u = pts2d[a] - pts2d[o]
        w = pts2d[b] - pts2d[o]
        c = u[0] * w[1] - u[1] * w[0]
        return c / max(float(np.hypot(*u) * np.hypot(*w)), 1e-300)

    lower: list[int] = []
    for i in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= tol:
            lower.pop()
        lower.append(i)
    upper: list[int] = []
    for i in reversed(order):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= tol:
            upper.pop()
        upper.append(i)
    return lower[:-1] + upper[:-1]


def convex_hull(points, hp_points=None) -> Polytope:
    """Triangulated boundary of the convex hull of ``points``.

    Coplanar qhull facets are merged into planar faces and re-triangulated as
    fans over their strict corners; points interior to faces or edges are
    dropped. The resulting polytope carries ``vertex_ids``: for each vertex,
    the row of ``points`` it came from (``source_ids``).
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 3 or len(P) < 4:
        raise DegenerateInput("need at least four 3D points")
    if not np.all(np.isfinite(P)):
        raise DegenerateInput("non-finite coordinates")
    span = float(np.linalg.norm(P.max(axis=0) - P.min(axis=0)))
    centered = P - P.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if span == 0.0 or sv[2] <= 1e-12 * max(span, 1.0) * np.sqrt(len(P)):
        raise DegenerateInput("points are coplanar or collinear")
    try:
        hull = ConvexHull(P)
    except QhullError as exc:
        raise DegenerateInput(str(exc)) from exc

    eq = hull.equations
    n_simp = len(hull.simplices)
    parent = list(range(n_simp))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tol_off = 1e-10 * max(span, 1.0)
    for s in range(n_simp):
        for t in hull.neighbors[s]:
            if t > s:
                dot = float(eq[s, :3] @ eq[t, :3])
                if dot > 1.0 - 1e-14 and abs(eq[s, 3] - eq[t, 3]) < tol_off:
                    parent[find(s)] = find(t)

    groups: dict[int, list[int]] = {}
    for s in range(n_simp):
        groups.setdefault(find(s), []).append(s)

    tris: list[tuple[int, int, int]] = []
    for members in groups.values():
        ids = np.unique(hull.simplices[members].ravel())
        normal = eq[members, :3].mean(axis=0)
        normal /= np.linalg.norm(normal)
        if len(members) > 1:
            # pairwise merging can drift along a slowly curving chain; keep
            # qhull's triangles when the group is not flat as a whole
            h = P[ids] @ normal
            if h.max() - h.min() > tol_off:
                for m in members:
                    a, b, c = (int(v) for v in hull.simplices[m])
                    if np.dot(np.cross(P[b] - P[a], P[c] - P[a]), eq[m, :3]) < 0:
                        b, c = c, b
                    tris.append((a, b, c))
                continue
        helper = np.eye(3)[int(np.argmin(np.abs(normal)))]
        e1 = np.cross(normal, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(normal, e1)
        local = P[ids] - P[ids].mean(axis=0)
        pts2d = np.column_stack([local @ e1, local @ e2])
        corners = _polygon_corners(pts2d, 1e-11)
        ring = [int(ids[c]) for c in corners]
        for k in range(1, len(ring) - 1):
            tris.append((ring[0], ring[k], ring[k + 1]))

    used = np.unique(np.array(tris).ravel())
    remap = -np.ones(len(P), dtype=np.int64)
    remap[used] = np.arange(len(used))
    F = remap[np.array(tris)]
    hp = None
    if hp_points is not None:
        hp = tuple(tuple(hp_points[i]) for i in used)
    poly = Polytope.from_faces(P[used], F, hp, check=False, source_ids=used)
    excess = poly.convexity_excess()
    if excess > TOL_CONVEX * poly.scale:
        raise InvalidMesh(f"hull failed convexity validation ({excess:.3g})")
    inputs = poly.plane_excess(P)
    if inputs > TOL_CONVEX * poly.scale:
        raise InvalidMesh(f"an input point lies outside the hull ({inputs:.3g})")
    return poly


def hull_vertex_ids(poly: Polytope) -> np.ndarray:
    """Input-row index of every vertex of a polytope made by :func:`convex_hull`."""
    if poly.source_ids is None:
        return np.arange(poly.n_vertices)
    return poly.source_ids


def inscribed_ball(poly: Polytope):
    """Chebyshev center: maximise ``r`` subject to ``n_f . c + r <= d_f``.

    Returns ``(center, r)``.
    """
    m = poly.n_facets
    A = np.hstack([poly.facet_normals, np.ones((m, 1))])
    res = linprog(
        c=[0.0, 0.0, 0.0, -1.0],
        A_ub=A,
        b_ub=poly.facet_offsets,
        bounds=[(None, None)] * 3 + [(0.0, None)],
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise SolverFailure(f"inscribed-ball LP failed: {res.message}")
    return res.x[:3].copy(), float(res.x[3])


def _ball_through(S: np.ndarray):
    """Smallest sphere whose boundary passes through the rows of ``S`` (<= 4)."""
    if len(S) == 0:
        return np.zeros(3), -1.0
    p0 = S[0]
    if len(S) == 1:
        return p0.copy(), 0.0
    U = S[1:] - p0
    G = U @ U.T
    rhs = 0.5 * np.einsum("ij,ij->i", U, U)
    lam, *_ = np.linalg.lstsq(G, rhs, rcond=1e-14)
    c = p0 + lam @ U
    return c, float(np.max(np.linalg.norm(S - c, axis=1)))


def _miniball(P: np.ndarray):
    # Move-to-front variant of Welzl's algorithm; recursion depth <= 4.
    pts = [P[i] for i in range(len(P))]
    slack = 1e-12

    def mtf(end: int, support: list[np.ndarray]):
        c, r = _ball_through(np.array(support) if support else np.empty((0, 3)))
        if len(support) == 4:
            return c, r
        i = 0
        while i < end:
            p = pts[i]
            if r < 0 or np.linalg.norm(p - c) > r * (1 + slack) + slack:
                c, r = mtf(i, support + [p])
                pts.insert(0, pts.pop(i))
            i += 1
        return c, r

    return mtf(len(pts), [])


def circumscribed_ball(poly: Polytope):
    """Minimum enclosing ball of the vertices. Returns ``(center, R)``."""
    V = poly.vertices
    rng = np.random.default_rng(0)
    order = rng.permutation(len(V))
    shift = V.mean(axis=0)
    c, _ = _miniball(V[order] - shift)
    c = c + shift
    R = float(np.max(np.linalg.norm(V - c, axis=1)))
    return c, R


def ball_data(poly: Polytope) -> BallData:
    ic, r = inscribed_ball(poly)
    oc, R = circumscribed_ball(poly)
    return BallData(in_center=ic, r=r, out_center=oc, R=R)


def normalize_to_unit_ball(poly: Polytope) -> Polytope:
    """Translate the minimum enclosing ball center to the origin and scale R to 1."""
    c, R = circumscribed_ball(poly)
    return poly.transformed(1.0 / R, -c)
