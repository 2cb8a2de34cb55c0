"""Shortest paths on the boundary of a convex polytope.

``shortest_path`` runs the exact window search in :mod:`._engine`. The other
public operations are building blocks with their own uses: a Steiner-graph
``seed_path``, ``unfold`` for facet strips, and ``straighten``, which pulls
a path taut inside its strip and re-routes it around vertices it snags on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from ._engine import Candidate, engine_for
from .errors import NoConvergence, NotAStrip
from .mesh import Polytope

TOL_GEO = 1e-9
TOL_STRAIGHT = 1e-10
BARY_EPS = 1e-12


@dataclass(frozen=True)
class SurfacePoint:
    """Point of the surface: a facet id and barycentric weights."""

    facet: int
    bary: tuple[float, float, float]

    def xyz(self, poly: Polytope) -> np.ndarray:
        return np.asarray(self.bary) @ poly.vertices[poly.facets[self.facet]]


@dataclass
class SurfacePath:
    """Polyline on the surface.

    ``points[0]`` is the source and ``points[-1]`` the target. Each interior
    point is an edge crossing (or a vertex for paths built from a graph);
    ``segment_facets[i]`` holds segment ``i``.
    """

    points: list[SurfacePoint]
    crossed_edges: list[int]
    length: float
    xyz: np.ndarray = field(repr=False)
    segment_facets: list[int] = field(default_factory=list)
    certified: bool = False
    ties: bool = False
    exact_length: object = field(default=None, repr=False)

    @property
    def n_segments(self) -> int:
        return len(self.xyz) - 1


@dataclass
class UnfoldedStrip:
    """Facets of a strip laid out in the plane.

    ``images[k]`` is a (3, 2) array with the 2D positions of the vertices of
    ``facets[k]`` (in the facet's vertex order). ``portals[k]`` is the pair
    of 2D endpoints of the edge shared by ``facets[k]`` and ``facets[k+1]``.
    """

    facets: list[int]
    edges: list[int]
    images: list[np.ndarray]
    portals: list[tuple[np.ndarray, np.ndarray]]
    source: np.ndarray | None = None
    target: np.ndarray | None = None


# ---------------------------------------------------------------------------
# points


def point_on_facet(poly: Polytope, facet: int, xyz) -> SurfacePoint:
    """Barycentric coordinates of ``xyz`` (assumed on or near ``facet``)."""
    tri = poly.vertices[poly.facets[facet]]
    p = np.asarray(xyz, dtype=float)
    A = np.vstack([(tri[1] - tri[0]), (tri[2] - tri[0])]).T
    uv, *_ = np.linalg.lstsq(A, p - tri[0], rcond=None)
    b = np.array([1.0 - uv.sum(), uv[0], uv[1]])
    b[np.abs(b) < BARY_EPS] = 0.0
    b = b / b.sum()
    return SurfacePoint(int(facet), tuple(float(x) for x in b))


def locate(poly: Polytope, xyz) -> SurfacePoint:
    """SurfacePoint for a 3D point lying on the boundary."""
    p = np.asarray(xyz, dtype=float)
    dist = np.abs(poly.facet_normals @ p - poly.facet_offsets)
    tol = 1e-9 * poly.scale
    best = None
    order = np.argsort(dist)
    near = max(64, int(np.count_nonzero(dist <= tol)))
    for f in order[:near]:
        sp = point_on_facet(poly, int(f), p)
        worst = -min(sp.bary)
        score = (max(worst, 0.0), dist[f])
        if best is None or score < best[0]:
            best = (score, sp)
        if worst <= 1e-12 and dist[f] <= tol:
            return sp
    # snap to the nearest facet
    b = np.clip(np.array(best[1].bary), 0.0, None)
    return SurfacePoint(best[1].facet, tuple(float(x) for x in b / b.sum()))


def random_surface_point(poly: Polytope, rng: np.random.Generator) -> SurfacePoint:
    """Uniformly distributed (area-weighted) point of the surface."""
    V = poly.vertices[poly.facets]
    area = np.linalg.norm(np.cross(V[:, 1] - V[:, 0], V[:, 2] - V[:, 0]), axis=1)
    f = int(rng.choice(len(area), p=area / area.sum()))
    u, v = rng.random(2)
    if u + v > 1.0:
        u, v = 1.0 - u, 1.0 - v
    return SurfacePoint(f, (float(1.0 - u - v), float(u), float(v)))


def vertex_point(poly: Polytope, v: int) -> SurfacePoint:
    f = int(np.nonzero((poly.facets == v).any(axis=1))[0][0])
    b = tuple(1.0 if int(u) == v else 0.0 for u in poly.facets[f])
    return SurfacePoint(f, b)


def point_reps(poly: Polytope, sp: SurfacePoint) -> list[tuple[int, tuple]]:
    """Every (facet, bary) representation of a point (several on edges/vertices)."""
    b = [0.0 if abs(x) < BARY_EPS else float(x) for x in sp.bary]
    tri = [int(v) for v in poly.facets[sp.facet]]
    zeros = [k for k in range(3) if b[k] == 0.0]
    if not zeros:
        return [(sp.facet, tuple(b))]
    if len(zeros) == 1:
        k = zeros[0]
        e = int(poly.facet_edges[sp.facet, k])
        g = poly.other_facet(e, sp.facet)
        weights = {tri[m]: b[m] for m in range(3)}
        gb = tuple(weights.get(int(v), 0.0) for v in poly.facets[g])
        return [(sp.facet, tuple(b)), (g, gb)]
    v = tri[[k for k in range(3) if k not in zeros][0]]
    out = []
    for f in np.nonzero((poly.facets == v).any(axis=1))[0]:
        out.append((int(f), tuple(1.0 if int(u) == v else 0.0 for u in poly.facets[f])))
    return out


# ---------------------------------------------------------------------------
# exact search


def _build_path(poly, eng, crossings, src: SurfacePoint, tgt_reps, cand, tgt_xyz=None):
    """Assemble a SurfacePath from engine crossings."""
    pts = [src]
    xyz = [src.xyz(poly)]
    seg_f = []
    crossed = []
    crossings = _trim_endpoint_crossings(poly, eng, crossings, xyz[0], tgt_xyz if tgt_xyz is not None else SurfacePoint(*tgt_reps[0]).xyz(poly))
    if crossings:
        first_e = crossings[0][0]
        f_from = poly.other_facet(first_e, crossings[0][1])
        src_reps = point_reps(poly, src)
        for f, b in src_reps:
            if f == f_from:
                pts[0] = SurfacePoint(f, b)
        seg_f.append(f_from)
    for e, f_to, x in crossings:
        i, j = poly.edges[e]
        t = float(x / eng.edge_len[e])
        t = min(max(t, 0.0), 1.0)
        p3 = (1 - t) * poly.vertices[i] + t * poly.vertices[j]
        tri = [int(v) for v in poly.facets[f_to]]
        bary = tuple((1 - t) if v == i else (t if v == j else 0.0) for v in tri)
        pts.append(SurfacePoint(int(f_to), bary))
        xyz.append(p3)
        seg_f.append(int(f_to))
        crossed.append(int(e))
    last_f = seg_f[-1] if seg_f else cand.facet
    tb = None
    for f, b in tgt_reps:
        if f == last_f:
            tb = SurfacePoint(f, b)
    if tb is None:
        tb = SurfacePoint(*tgt_reps[0])
    if not seg_f:
        seg_f.append(last_f)
        if src.facet != last_f:
            for f, b in point_reps(poly, src):
                if f == last_f:
                    pts[0] = SurfacePoint(f, b)
    pts.append(tb)
    xyz.append(tb.xyz(poly) if tgt_xyz is None else tgt_xyz)
    xyz = np.array(xyz)
    length = float(np.linalg.norm(np.diff(xyz, axis=0), axis=1).sum())
    return SurfacePath(pts, crossed, length, xyz, seg_f, exact_length=cand.length)


def _trim_endpoint_crossings(poly, eng, crossings, s3, t3):
    # a path that starts or ends at a vertex may carry zero-length crossings of
    # the edges around it
    def near(c, x3):
        # tolerance scaled by the magnitudes along the crossed edge
        e, _, x = c
        i, j = poly.edges[e]
        p, q = poly.vertices[i], poly.vertices[j]
        t = min(max(float(x / eng.edge_len[e]), 0.0), 1.0)
        tol = 1e-12 * max(np.abs(p).max(), np.abs(q).max(), float(np.linalg.norm(q - p)))
        return np.linalg.norm((1 - t) * p + t * q - x3) <= tol

    crossings = list(crossings)
    while crossings and near(crossings[-1], t3):
        crossings.pop()
    while crossings and near(crossings[0], s3):
        crossings.pop(0)
    return crossings


def _same_point(poly, a: SurfacePoint, b: SurfacePoint) -> bool:
    return float(np.linalg.norm(a.xyz(poly) - b.xyz(poly))) <= 1e-14 * poly.scale


def shortest_path(poly: Polytope, a: SurfacePoint, b: SurfacePoint, *, precision: int | None = None) -> SurfacePath:
    """Globally shortest boundary path from ``a`` to ``b``.

    Exact up to floating point (or ``precision`` decimal digits with
    mpmath). ``ties`` is set when a geometrically different path is within
    ``TOL_GEO`` relative of the optimum.
    """
    if _same_point(poly, a, b):
        raise ValueError("source and target coincide")
    eng = engine_for(poly, precision)
    src_reps = point_reps(poly, a)
    tgt_reps = point_reps(poly, b)
    res = eng.search(src_reps, [tgt_reps], tie_rel=TOL_GEO)
    cand = res["best"][0]
    if cand is None:
        raise NoConvergence("target never reached")
    crossings = eng.trace(res["windows"], cand, None, None)
    path = _build_path(poly, eng, crossings, a, tgt_reps, cand)
    path.certified = True
    for run in sorted(res["runner"][0], key=lambda c: c.length):
        if run.length > cand.length * (1 + TOL_GEO) + eng.tol:
            break
        other = _build_path(poly, eng, eng.trace(res["windows"], run, None, None), a, tgt_reps, run)
        if _distinct(path, other):
            path.ties = True
            break
    return path


def _distinct(p: SurfacePath, q: SurfacePath) -> bool:
    if p.crossed_edges == q.crossed_edges:
        return False
    mp = _point_at(p.xyz, 0.5)
    mq = _point_at(q.xyz, 0.5)
    return float(np.linalg.norm(mp - mq)) > 1e-6 * max(p.length, 1e-300)


def _point_at(xyz: np.ndarray, frac: float) -> np.ndarray:
    seg = np.linalg.norm(np.diff(xyz, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = frac * cum[-1]
    k = int(np.clip(np.searchsorted(cum, s) - 1, 0, len(seg) - 1))
    t = 0.0 if seg[k] == 0 else (s - cum[k]) / seg[k]
    return xyz[k] + t * (xyz[k + 1] - xyz[k])


def geodesic_distance(poly: Polytope, a: SurfacePoint, b: SurfacePoint, *, precision=None):
    """Length of the shortest path (an mpmath number when ``precision`` is set)."""
    if _same_point(poly, a, b):
        return 0.0
    eng = engine_for(poly, precision)
    res = eng.search(point_reps(poly, a), [point_reps(poly, b)], tie_rel=0.0)
    return res["best"][0].length if precision else float(res["best"][0].length)


def distances_to_points(poly: Polytope, a: SurfacePoint, targets, *, precision=None) -> list:
    """Geodesic distances from ``a`` to every point of ``targets`` in one sweep."""
    eng = engine_for(poly, precision)
    res = eng.search(point_reps(poly, a), [point_reps(poly, t) for t in targets], tie_rel=0.0)
    out = []
    for c in res["best"]:
        if c is None:
            raise NoConvergence("a target was never reached")
        out.append(c.length if precision else float(c.length))
    return out


def sweep(poly: Polytope, a: SurfacePoint, targets=(), edge_sets=(), *, precision=None):
    """Shortest paths to several points and distances to several edge sets in one search.

    Returns ``(paths, dists)``; paths are not checked for ties.
    """
    eng = engine_for(poly, precision)
    reps = [point_reps(poly, t) for t in targets]
    res = eng.search(point_reps(poly, a), reps, edge_groups=[{int(e) for e in s} for s in edge_sets], tie_rel=0.0)
    paths = []
    for t, r, cand in zip(targets, reps, res["best"]):
        if cand is None:
            raise NoConvergence("a target was never reached")
        sp = _build_path(poly, eng, eng.trace(res["windows"], cand, None, None), a, r, cand)
        sp.certified = True
        paths.append(sp)
    dists = []
    for cand in res["group_best"]:
        if cand is None:
            raise NoConvergence("an edge set was never reached")
        dists.append(cand.length if precision else float(cand.length))
    return paths, dists


def distance_to_edge_set(poly: Polytope, x0: SurfacePoint, edges, *, precision=None, return_path=False):
    """``min`` over points ``y`` of the given edges of the geodesic distance.

    Returns ``(dist, argmin)`` (and the path when ``return_path``).
    """
    edges = {int(e) for e in edges}
    if not edges:
        raise ValueError("edge set is empty")
    eng = engine_for(poly, precision)
    src_reps = point_reps(poly, x0)
    for f, b in src_reps:
        for k in range(3):
            if abs(b[k]) < BARY_EPS and int(poly.facet_edges[f, k]) in edges:
                out = (0.0, x0)
                return out + (None,) if return_path else out
    res = eng.search(src_reps, [], edges, tie_rel=0.0)
    cand = res["edge_best"]
    if cand is None:
        raise NoConvergence("edge set never reached")
    if cand.window < 0:
        # straight segment inside a source facet
        e = cand.t2[0]
        i, j = poly.edges[e]
        p, q = poly.vertices[i], poly.vertices[j]
        s = x0.xyz(poly)
        t = float(np.clip(np.dot(s - p, q - p) / np.dot(q - p, q - p), 0.0, 1.0))
        y3 = p + t * (q - p)
        y = point_on_facet(poly, cand.facet, y3)
        dist = cand.length
        path = SurfacePath([x0, y], [], float(np.linalg.norm(y3 - s)), np.array([s, y3]), [cand.facet])
    else:
        e, f_to = res["windows"][cand.window][:2]
        x = cand.t2[0]
        i, j = poly.edges[e]
        t = float(x / eng.edge_len[e])
        y3 = (1 - t) * poly.vertices[i] + t * poly.vertices[j]
        tri = [int(v) for v in poly.facets[f_to]]
        y = SurfacePoint(int(f_to), tuple((1 - t) if v == i else (t if v == j else 0.0) for v in tri))
        dist = cand.length
        path = None
        if return_path:
            crossings = eng.trace(res["windows"], Candidate(cand.length, cand.window, f_to, (x, eng.num(0)), 0), None, None)
            crossings = crossings[:-1]
            path = _build_path(poly, eng, crossings, x0, point_reps(poly, y), cand, tgt_xyz=y3)
    if not precision:
        dist = float(dist)
    if return_path:
        return dist, y, path
    return dist, y


# ---------------------------------------------------------------------------
# Steiner graph seeding


def seed_path(poly: Polytope, a: SurfacePoint, b: SurfacePoint, steiner_per_edge: int = 32) -> SurfacePath:
    """Shortest path in a graph of vertices and evenly spaced edge points.

    Every pair of graph nodes on a common facet is joined by its straight
    segment, so the result is a genuine surface path and its length bounds
    the geodesic distance from above.
    """
    if _same_point(poly, a, b):
        raise ValueError("source and target coincide")
    V = poly.vertices
    nv = poly.n_vertices
    k = int(steiner_per_edge)
    ne = len(poly.edges)
    ts = np.arange(1, k + 1) / (k + 1)
    node_xyz = [V]
    if k:
        p = V[poly.edges[:, 0]]
        q = V[poly.edges[:, 1]]
        node_xyz.append((p[:, None, :] + ts[None, :, None] * (q - p)[:, None, :]).reshape(-1, 3))
    a3, b3 = a.xyz(poly), b.xyz(poly)
    src, dst = nv + ne * k, nv + ne * k + 1
    node_xyz.append(np.array([a3, b3]))
    X = np.vstack(node_xyz)

    # nodes on each facet
    fn = np.empty((poly.n_facets, 3 + 3 * k), dtype=np.int64)
    fn[:, :3] = poly.facets
    if k:
        fn[:, 3:] = (nv + poly.facet_edges[:, :, None] * k + np.arange(k)[None, None, :]).reshape(poly.n_facets, -1)
    extra = {}
    for node, sp in ((src, a), (dst, b)):
        for f, _ in point_reps(poly, sp):
            extra.setdefault(f, []).append(node)
    rows, cols = [], []
    m = fn.shape[1]
    iu, ju = np.triu_indices(m, 1)
    rows.append(fn[:, iu].ravel())
    cols.append(fn[:, ju].ravel())
    for f, nodes in extra.items():
        for node in nodes:
            others = np.concatenate([fn[f], np.array([n for n in nodes if n != node], dtype=np.int64)])
            rows.append(np.full(len(others), node))
            cols.append(others)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    w = np.linalg.norm(X[r] - X[c], axis=1)
    keep = w > 0
    G = coo_matrix((w[keep], (r[keep], c[keep])), shape=(len(X), len(X))).tocsr()
    G = G.maximum(G.T)
    dist, pred = dijkstra(G, directed=False, indices=src, return_predecessors=True)
    if not np.isfinite(dist[dst]):
        raise NoConvergence("graph is disconnected")
    chain = [dst]
    while chain[-1] != src:
        chain.append(int(pred[chain[-1]]))
    chain.reverse()
    return _graph_path(poly, chain, X, k, a, b)


def _node_facets(poly, node, k, a, b, nv, ne):
    if node < nv:
        return set(np.nonzero((poly.facets == node).any(axis=1))[0].tolist())
    if node < nv + ne * k:
        e = (node - nv) // k
        return set(poly.edge_facets[e].tolist())
    sp = a if node == nv + ne * k else b
    return {f for f, _ in point_reps(poly, sp)}


def _graph_path(poly, chain, X, k, a, b) -> SurfacePath:
    nv, ne = poly.n_vertices, len(poly.edges)
    facets_of = [_node_facets(poly, n, k, a, b, nv, ne) for n in chain]
    seg_f = []
    for s in range(len(chain) - 1):
        common = facets_of[s] & facets_of[s + 1]
        seg_f.append(min(common))
    # expand vertex hops between non-adjacent facets into fans
    full_f = [seg_f[0]]
    for s in range(1, len(seg_f)):
        prev, cur = full_f[-1], seg_f[s]
        if prev != cur and not _adjacent(poly, prev, cur):
            v = chain[s]
            full_f.extend(_fan(poly, v, prev, cur)[1:-1])
        full_f.append(cur)
    dedup = [full_f[0]]
    for f in full_f[1:]:
        if f != dedup[-1]:
            dedup.append(f)
    xyz = X[chain]
    pts = [_pin(poly, a, dedup[0])] + [locate_on(poly, X[n], facets_of[i + 1]) for i, n in enumerate(chain[1:-1])]
    pts.append(_pin(poly, b, dedup[-1]))
    crossed = [_shared_edge(poly, dedup[i], dedup[i + 1]) for i in range(len(dedup) - 1)]
    length = float(np.linalg.norm(np.diff(xyz, axis=0), axis=1).sum())
    return SurfacePath(pts, crossed, length, xyz, dedup)


def locate_on(poly, p, facets):
    f = min(facets)
    return point_on_facet(poly, f, p)


def _pin(poly, sp, facet):
    for f, b in point_reps(poly, sp):
        if f == facet:
            return SurfacePoint(f, b)
    return sp


def _adjacent(poly, f, g) -> bool:
    return bool(np.intersect1d(poly.facet_edges[f], poly.facet_edges[g]).size)


def _shared_edge(poly, f, g) -> int:
    common = np.intersect1d(poly.facet_edges[f], poly.facet_edges[g])
    if common.size != 1:
        raise NotAStrip(f"facets {f} and {g} do not share an edge")
    return int(common[0])


def _vertex_ring(poly: Polytope, v: int) -> list[int]:
    """Facets around vertex ``v`` in cyclic order."""
    inc = [int(f) for f in np.nonzero((poly.facets == v).any(axis=1))[0]]
    ring = [inc[0]]
    prev_e = None
    while True:
        f = ring[-1]
        es = [int(e) for e in poly.facet_edges[f] if v in poly.edges[e] and e != prev_e]
        e = es[0]
        g = poly.other_facet(e, f)
        if g == ring[0]:
            break
        ring.append(g)
        prev_e = e
        if len(ring) > len(inc):
            raise NotAStrip("vertex link is not a cycle")
    return ring


def _fan_angle(poly, v, facets) -> float:
    total = 0.0
    for f in facets:
        tri = [int(u) for u in poly.facets[f]]
        k = tri.index(v)
        p = poly.vertices[v]
        u = poly.vertices[tri[(k + 1) % 3]] - p
        w = poly.vertices[tri[(k + 2) % 3]] - p
        total += math.atan2(np.linalg.norm(np.cross(u, w)), np.dot(u, w))
    return total


def _fan(poly, v, f, g, *, avoid=None) -> list[int]:
    """Facets around ``v`` from ``f`` to ``g`` (inclusive).

    Takes the side with the smaller total angle, or the side not containing
    the facets of ``avoid`` when given.
    """
    ring = _vertex_ring(poly, v)
    i, j = ring.index(f), ring.index(g)
    n = len(ring)
    fwd = [ring[(i + s) % n] for s in range(((j - i) % n) + 1)]
    bwd = [ring[(i - s) % n] for s in range(((i - j) % n) + 1)]
    if avoid is not None:
        inner = set(avoid)
        fwd_hit = bool(inner & set(fwd[1:-1]))
        bwd_hit = bool(inner & set(bwd[1:-1]))
        if fwd_hit != bwd_hit:
            return bwd if fwd_hit else fwd
    return fwd if _fan_angle(poly, v, fwd) <= _fan_angle(poly, v, bwd) else bwd


# ---------------------------------------------------------------------------
# unfolding and straightening


def _frame_facet(P3: np.ndarray) -> np.ndarray:
    """Isometric 2D image of a triangle with its first vertex at the origin."""
    u = P3[1] - P3[0]
    w = P3[2] - P3[0]
    L = np.linalg.norm(u)
    ex = u / L
    x2 = np.dot(w, ex)
    y2 = np.linalg.norm(w - x2 * ex)
    return np.array([[0.0, 0.0], [L, 0.0], [x2, y2]])


def unfold(poly: Polytope, edge_sequence, start_facet: int) -> UnfoldedStrip:
    """Lay a strip of facets in the plane, starting from ``start_facet``."""
    facets = [int(start_facet)]
    edges = [int(e) for e in edge_sequence]
    for e in edges:
        f = facets[-1]
        if e not in poly.facet_edges[f]:
            raise NotAStrip(f"edge {e} is not on facet {f}")
        facets.append(poly.other_facet(e, f))
    images = [_frame_facet(poly.vertices[poly.facets[facets[0]]])]
    portals = []
    for k, e in enumerate(edges):
        f, g = facets[k], facets[k + 1]
        tri_f = [int(v) for v in poly.facets[f]]
        tri_g = [int(v) for v in poly.facets[g]]
        i, j = (int(x) for x in poly.edges[e])
        Pi = images[k][tri_f.index(i)]
        Pj = images[k][tri_f.index(j)]
        third_f = images[k][[m for m in range(3) if tri_f[m] not in (i, j)][0]]
        o = [v for v in tri_g if v not in (i, j)][0]
        L = np.linalg.norm(Pj - Pi)
        u = poly.vertices[j] - poly.vertices[i]
        w = poly.vertices[o] - poly.vertices[i]
        # cross product form; sqrt(|w|^2 - ox^2) cancels on thin facets
        ox = float(u @ w) / L
        oy = float(np.linalg.norm(np.cross(u, w))) / L
        ex = (Pj - Pi) / L
        ey = np.array([-ex[1], ex[0]])
        if np.dot(third_f - Pi, ey) > 0:
            ey = -ey
        Po = Pi + ox * ex + oy * ey
        img = np.empty((3, 2))
        for m, v in enumerate(tri_g):
            img[m] = Pi if v == i else (Pj if v == j else Po)
        images.append(img)
        portals.append((Pi, Pj))
    return UnfoldedStrip(facets, edges, images, portals)


def _image_of(strip: UnfoldedStrip, k: int, poly: Polytope, sp: SurfacePoint) -> np.ndarray:
    f = strip.facets[k]
    for g, b in point_reps(poly, sp):
        if g == f:
            return np.asarray(b) @ strip.images[k]
    raise NotAStrip("point is not on the strip facet")


def _cross2(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _funnel(src, dst, portals, left_ids, right_ids):
    """Funnel algorithm over (left, right) portals; returns [(id, point)]."""
    ports = list(portals) + [(dst, dst)]
    lids = list(left_ids) + ["t"]
    rids = list(right_ids) + ["t"]
    out = [("s", src)]
    apex = left = right = src
    left_i = right_i = -1
    i = 0
    while i < len(ports):
        pl, pr = ports[i]
        if _cross2(apex, right, pr) >= 0:
            if right is apex or _cross2(apex, left, pr) < 0:
                right, right_i = pr, i
            else:
                apex = left
                out.append((lids[left_i], apex))
                i = left_i + 1
                right, right_i = apex, left_i
                continue
        if _cross2(apex, left, pl) <= 0:
            if left is apex or _cross2(apex, right, pl) > 0:
                left, left_i = pl, i
            else:
                apex = right
                out.append((rids[right_i], apex))
                i = right_i + 1
                left, left_i = apex, right_i
                continue
        i += 1
    if out[-1][0] != "t":
        out.append(("t", dst))
    return out


def _strip_portals(poly, strip):
    """Portals as (left, right) 2D points and vertex ids w.r.t. the travel direction."""
    lefts, rights, lids, rids = [], [], [], []
    for k, e in enumerate(strip.edges):
        i, j = (int(x) for x in poly.edges[e])
        Pi, Pj = strip.portals[k]
        c0 = strip.images[k].mean(axis=0)
        c1 = strip.images[k + 1].mean(axis=0)
        d = c1 - c0
        if d[0] * (Pi[1] - c0[1]) - d[1] * (Pi[0] - c0[0]) > 0:
            lefts.append(Pi); lids.append(i); rights.append(Pj); rids.append(j)
        else:
            lefts.append(Pj); lids.append(j); rights.append(Pi); rids.append(i)
    return list(zip(lefts, rights)), lids, rids


def straighten(poly: Polytope, path: SurfacePath, max_iters: int = 10_000) -> SurfacePath:
    """Shortest path inside the path's facet strip, re-routed around snags.

    When the taut path touches a vertex of the strip it would get shorter by
    passing the vertex on the other side (the cone angle there is below
    ``2*pi``), so the run of facets around that vertex is replaced by the
    complementary fan and the procedure repeats.
    """
    a, b = path.points[0], path.points[-1]
    facets = _clean_sequence(poly, list(path.segment_facets))
    for _ in range(max_iters):
        edges = [_shared_edge(poly, facets[k], facets[k + 1]) for k in range(len(facets) - 1)]
        strip = unfold(poly, edges, facets[0])
        src = _image_of(strip, 0, poly, a)
        dst = _image_of(strip, len(facets) - 1, poly, b)
        portals, lids, rids = _strip_portals(poly, strip)
        apexes = _funnel(src, dst, portals, lids, rids)
        bends = [vid for vid, _ in apexes[1:-1]]
        if not bends:
            return _straight_in_strip(poly, strip, a, b, src, dst)
        v = int(bends[0])
        run = [k for k, f in enumerate(facets) if v in poly.facets[f]]
        # contiguous run containing v around the first bend
        k0 = run[0]
        k1 = k0
        while k1 + 1 < len(facets) and v in poly.facets[facets[k1 + 1]]:
            k1 += 1
        if k0 == k1:
            raise NoConvergence("funnel bent at a vertex outside the strip")
        new_fan = _fan(poly, v, facets[k0], facets[k1], avoid=facets[k0 + 1 : k1])
        facets = _clean_sequence(poly, facets[:k0] + new_fan + facets[k1 + 1 :])
    raise NoConvergence("straightening did not reach a fixed point")


def _clean_sequence(poly, facets):
    out = []
    for f in facets:
        if out and out[-1] == f:
            continue
        if len(out) >= 2 and out[-2] == f:
            out.pop()
            continue
        out.append(f)
    return out


def _straight_in_strip(poly, strip, a, b, src, dst) -> SurfacePath:
    pts = [_pin(poly, a, strip.facets[0])]
    xyz = [a.xyz(poly)]
    seg_f = [strip.facets[0]]
    crossed = []
    d = dst - src
    for k, e in enumerate(strip.edges):
        Pi, Pj = strip.portals[k]
        i, j = (int(x) for x in poly.edges[e])
        den = (Pj[0] - Pi[0]) * d[1] - (Pj[1] - Pi[1]) * d[0]
        if abs(den) < 1e-300:
            t = 0.5
        else:
            t = ((src[0] - Pi[0]) * d[1] - (src[1] - Pi[1]) * d[0]) / den
        t = min(max(t, 0.0), 1.0)
        p3 = (1 - t) * poly.vertices[i] + t * poly.vertices[j]
        g = strip.facets[k + 1]
        tri = [int(v) for v in poly.facets[g]]
        pts.append(SurfacePoint(g, tuple((1 - t) if v == i else (t if v == j else 0.0) for v in tri)))
        xyz.append(p3)
        seg_f.append(g)
        crossed.append(e)
    pts.append(_pin(poly, b, strip.facets[-1]))
    xyz.append(b.xyz(poly))
    xyz = np.array(xyz)
    length = float(np.linalg.norm(np.diff(xyz, axis=0), axis=1).sum())
    return SurfacePath(pts, crossed, length, xyz, seg_f)


def unfolding_deviation(poly: Polytope, path: SurfacePath) -> float:
    """Largest turning angle of the path's unfolded image (0 for a geodesic)."""
    if len(path.segment_facets) < 2:
        return 0.0
    strip = unfold(poly, path.crossed_edges, path.segment_facets[0])
    pts2 = [_image_of(strip, 0, poly, path.points[0])]
    for k, e in enumerate(path.crossed_edges):
        Pi, Pj = strip.portals[k]
        i, j = (int(x) for x in poly.edges[e])
        p3 = path.xyz[k + 1]
        t = np.linalg.norm(p3 - poly.vertices[i]) / np.linalg.norm(poly.vertices[j] - poly.vertices[i])
        pts2.append((1 - t) * Pi + t * Pj)
    pts2.append(_image_of(strip, len(strip.facets) - 1, poly, path.points[-1]))
    worst = 0.0
    for k in range(1, len(pts2) - 1):
        u = pts2[k] - pts2[k - 1]
        w = pts2[k + 1] - pts2[k]
        if np.linalg.norm(u) < 1e-15 or np.linalg.norm(w) < 1e-15:
            continue
        ang = abs(math.atan2(u[0] * w[1] - u[1] * w[0], float(np.dot(u, w))))
        worst = max(worst, ang)
    return worst
