"""Tower of homothetic equilateral triangles carrying a spiralling geodesic.

The tower starts from a pyramid with apex ``x0`` over a small equilateral
triangle. Every new level scales the current top triangle ``abc`` by ``q``
about a centre ``z`` placed far behind the apex of the smallest regular
pyramid over ``abc`` that contains the surface built so far, and pushed
slightly towards the edge ``ab``. The edge of the new triangle nearest to
``x0`` (intrinsically) is then the image of ``ab``, so the nearest edge
rotates by a third of a turn per level and the geodesic from ``x0`` to the
top follows it.

Level spacings grow by orders of magnitude, so coordinates are kept in
mpmath (``Polytope.hp_vertices``) and distances are measured with the
engine in high precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from ..errors import ConditionUnsatisfiable, InvalidParams
from ..geodesic import SurfacePoint, distance_to_edge_set, sweep, vertex_point
from ..mesh import Polytope
from ..metrics import spiralling_number, turning_data

TURNS = ("left", "right", "alternate")


@dataclass(frozen=True)
class SpiralTowerParams:
    """Tower parameters.

    Parameters
    ----------
    n_triangles : int
        Number of stacked triangles (1 gives the initial pyramid).
    q : float
        Scale factor between consecutive triangles, > 3. Used as the first
        try; a level that fails its checks is retried with a larger ``q``.
    apex_offset : float
        ``z`` sits at least ``(1 + apex_offset)`` times as far from the
        triangle as the apex of the containing regular pyramid.
    axis_jitter : float
        Lateral offset of ``z`` towards ``ab`` in units of the side length;
        must stay below ``1/sqrt(3)`` so that ``gamma > pi/2``.
    base_side : float
        Side of the first triangle.
    turn : str
        ``"left"`` or ``"right"`` spiral with a fixed sense (mirror images
        of each other); ``"alternate"`` reverses the sense at every level.
    samples : int
        Points ``w`` checked on every new nearest edge.
    """

    n_triangles: int = 10
    q: float = 60.0
    apex_offset: float = 1.0
    axis_jitter: float = 0.17
    base_side: float = 1.0
    seed: int = 0
    turn: str = "left"
    samples: int = 5
    max_retries: int = 12
    dps: int | None = None


@dataclass
class LevelRecord:
    """Measured quantities of one accepted level."""

    level: int
    q: float
    height: float  # distance of z from the old triangle plane
    eps: float  # margin of the old nearest edge
    dist_cs: float
    gap_sa: float  # delta(s, a') - delta(a, a')
    side_gap: float  # delta(b, b')(sin gamma - sin alpha)
    alpha: float
    gamma: float
    gamma_excess: float  # gamma - pi/2, taken before rounding
    alpha_minus_gamma: float
    new_margin: float  # margin of the new nearest edge (condition (i))
    crossings_ok: bool  # condition (ii)
    retries: int
    log: list = field(default_factory=list)

    @property
    def chain_ok(self) -> bool:
        return (
            self.dist_cs < self.eps / 2
            and self.gap_sa < self.eps / 2
            and self.side_gap > self.eps
            and self.gamma_excess > 0
            and self.alpha_minus_gamma > 0
        )

    @property
    def passed(self) -> bool:
        return self.chain_ok and self.new_margin > 0 and self.crossings_ok


@dataclass
class SpiralTower:
    poly: Polytope
    x0: SurfacePoint
    top_edge: int
    markers: list[int]  # nearest edge of every triangle, bottom to top
    levels: list[LevelRecord]
    params: SpiralTowerParams
    precision: int
    triangles: list[tuple[int, int, int]]

    def __iter__(self):
        # unpacks as (P, x0, top_edge, markers)
        return iter((self.poly, self.x0, self.top_edge, self.markers))


# -- small mp vector helpers ----------------------------------------------------


def _add(u, v):
    return (u[0] + v[0], u[1] + v[1], u[2] + v[2])


def _sub(u, v):
    return (u[0] - v[0], u[1] - v[1], u[2] - v[2])


def _mul(s, u):
    return (s * u[0], s * u[1], s * u[2])


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _norm(u):
    return mpmath.sqrt(_dot(u, u))


def _angle(u, v):
    c = _dot(u, v) / (_norm(u) * _norm(v))
    return mpmath.acos(max(min(c, 1), -1))


# -- the build ------------------------------------------------------------------


class _Builder:
    def __init__(self, p: SpiralTowerParams):
        if p.q <= 3:
            raise InvalidParams("q must exceed 3")
        if not 0 < p.axis_jitter < 1 / math.sqrt(3):
            raise InvalidParams("axis_jitter must lie in (0, 1/sqrt(3))")
        if p.turn not in TURNS:
            raise InvalidParams(f"turn must be one of {TURNS}")
        if p.n_triangles < 1 or p.apex_offset <= 0 or p.base_side <= 0:
            raise InvalidParams("n_triangles >= 1, apex_offset > 0 and base_side > 0 required")
        self.p = p
        self.dps = p.dps or int(40 + 4 * p.n_triangles * math.log10(p.q))
        self.N = (mpmath.mpf(0), mpmath.mpf(0), mpmath.mpf(1))
        ell = mpmath.mpf(p.base_side)
        R = ell / mpmath.sqrt(3)
        ang = [mpmath.pi / 2, mpmath.pi * 7 / 6, mpmath.pi * 11 / 6]
        tri = [(R * mpmath.cos(t), R * mpmath.sin(t), mpmath.mpf(0)) for t in ang]
        rng = np.random.default_rng(p.seed)
        # apex above the triangle, pulled towards edge (1, 2)
        pull = mpmath.mpf(0.3 + 0.05 * rng.random()) * R / 2
        x0 = (mpmath.mpf(0), -pull, ell)
        self.V = [x0] + tri
        self.tris = [(1, 2, 3)]
        # labels (a, b, c): bc is the nearest edge
        self.labels = (1, 3, 2) if p.turn == "right" else (1, 2, 3)
        self.levels: list[LevelRecord] = []
        self.markers: list[tuple[int, int]] = []
        self.next_margin = None

    # faces of the current surface
    def faces(self):
        F = []
        t0 = self.tris[0]
        for k in range(3):
            F.append((0, t0[k], t0[(k + 1) % 3]))
        for lo, hi in zip(self.tris, self.tris[1:]):
            for k in range(3):
                u, v = lo[k], lo[(k + 1) % 3]
                u2, v2 = hi[k], hi[(k + 1) % 3]
                F.append((u, v, v2))
                F.append((u, v2, u2))
        F.append(self.tris[-1])
        return F

    def polytope(self) -> Polytope:
        Vf = np.array([[float(c) for c in v] for v in self.V])
        return Polytope.from_faces(Vf, self.faces(), hp_vertices=tuple(self.V))

    def edge_dists(self, poly, x0, tri):
        out = {}
        for k in range(3):
            u, v = tri[k], tri[(k + 1) % 3]
            e = poly.edge_id(u, v)
            out[frozenset((u, v))] = distance_to_edge_set(poly, x0, [e], precision=self.dps)[0]
        return out

    def margin(self, poly, x0, labels):
        a, b, c = labels
        d = self.edge_dists(poly, x0, labels)
        near = d[frozenset((b, c))]
        return min(d[frozenset((a, b))], d[frozenset((c, a))]) - near

    # one level ------------------------------------------------------------------
    def containing_height(self, tri):
        """Height of the smallest regular pyramid over ``tri`` holding the surface."""
        P = [self.V[i] for i in tri]
        o = _mul(mpmath.mpf(1) / 3, _add(_add(P[0], P[1]), P[2]))
        H = mpmath.mpf(0)
        for k in range(3):
            mid = _mul(mpmath.mpf(0.5), _add(P[k], P[(k + 1) % 3]))
            m = _sub(mid, o)
            rho = _norm(m)
            m = _mul(1 / rho, m)
            for i, p in enumerate(self.V):
                if i in tri:
                    continue
                h = _dot(_sub(p, o), self.N)
                lat = _dot(_sub(p, o), m)
                if lat >= rho:
                    raise ConditionUnsatisfiable("surface not over the top triangle")
                H = max(H, h * rho / (rho - lat))
        return H

    def chain(self, labels, H, q, eps):
        """The three inequalities of one level for centre height ``H``."""
        a, b, c = (self.V[i] for i in labels)
        o = _mul(mpmath.mpf(1) / 3, _add(_add(a, b), c))
        ell = _norm(_sub(b, a))
        mhat = _sub(_mul(mpmath.mpf(0.5), _add(a, b)), o)
        mhat = _mul(1 / _norm(mhat), mhat)
        z = _add(_add(o, _mul(H, self.N)), _mul(self.p.axis_jitter * ell, mhat))
        bb = _mul(q - 1, _sub(b, z))  # b' - b
        alpha = _angle(_sub(a, b), bb)
        gamma = _angle(_sub(c, b), bb)
        turn = alpha + gamma - mpmath.pi
        dist_cs = ell * abs(mpmath.sin(turn))
        # unfolding of abb'a' with a at the origin, b at (ell, 0)
        la = (q - 1) * _norm(_sub(a, z))
        a2 = (la * mpmath.cos(alpha), -la * mpmath.sin(alpha))
        s = (ell + ell * mpmath.cos(turn), mpmath.mpf(0))
        gap_sa = mpmath.sqrt((s[0] - a2[0]) ** 2 + (s[1] - a2[1]) ** 2) - la
        side_gap = _norm(bb) * (mpmath.sin(gamma) - mpmath.sin(alpha))
        return z, dict(alpha=alpha, gamma=gamma, dist_cs=dist_cs, gap_sa=gap_sa, side_gap=side_gap)

    def pick_height(self, labels, q, eps, H0):
        """Low end of the heights satisfying the chain (two 1.25 steps in), or None.

        Staying low keeps the tower from flattening towards its axis, which
        would push the spiral below double precision in later levels.
        """
        ok = []
        H = H0
        for _ in range(400):
            _, m = self.chain(labels, H, q, eps)
            good = (
                m["dist_cs"] < eps / 2
                and m["gap_sa"] < eps / 2
                and m["side_gap"] > eps
                and mpmath.pi / 2 < m["gamma"] < m["alpha"]
            )
            if good:
                ok.append(H)
            elif ok:
                break
            H *= mpmath.mpf(1.25)
        if not ok:
            return None
        return ok[min(2, len(ok) - 1)]

    def contains(self, z, tri):
        """Is every surface vertex inside conv(z, tri)?"""
        P = [self.V[i] for i in tri]
        o = _mul(mpmath.mpf(1) / 3, _add(_add(P[0], P[1]), P[2]))
        for k in range(3):
            u, v = P[k], P[(k + 1) % 3]
            nrm = _cross(_sub(v, u), _sub(z, u))
            if _dot(nrm, _sub(o, u)) > 0:
                nrm = _mul(-1, nrm)
            for i, p in enumerate(self.V):
                if i not in tri and _dot(nrm, _sub(p, u)) > 0:
                    return False
        return True

    def add_level(self, poly, x0):
        p = self.p
        labels = self.labels
        a, b, c = labels
        eps = self.next_margin if self.next_margin is not None else self.margin(poly, x0, labels)
        if eps <= 0:
            raise ConditionUnsatisfiable("nearest edge is not strictly nearest")
        tri = self.tris[-1]
        Hc = self.containing_height(tri)
        q = mpmath.mpf(p.q)
        log = []
        for attempt in range(p.max_retries):
            H = self.pick_height(labels, q, eps, Hc * (1 + mpmath.mpf(p.apex_offset)))
            if H is None:
                log.append({"q": float(q), "reason": "chain infeasible"})
                q *= mpmath.mpf(1.5)
                continue
            z, m = self.chain(labels, H, q, eps)
            if not self.contains(z, tri):
                log.append({"q": float(q), "reason": "centre does not contain surface"})
                q *= mpmath.mpf(1.5)
                continue
            base = len(self.V)
            new = [_add(z, _mul(q, _sub(self.V[i], z))) for i in tri]
            self.V.extend(new)
            self.tris.append(tuple(base + k for k in range(3)))
            img = {tri[k]: base + k for k in range(3)}
            a2, b2, c2 = img[a], img[b], img[c]
            poly2 = self.polytope()
            e_bc = poly2.edge_id(b, c)
            e_ab = poly2.edge_id(a2, b2)
            ws = [_point_on_edge(poly2, a2, b2, (k + 0.5) / p.samples) for k in range(p.samples)]
            sides = [[e_ab], [poly2.edge_id(b2, c2)], [poly2.edge_id(c2, a2)]]
            # one search: paths to the samples and distances to the three new edges
            paths, (d_ab, d_bc, d_ca) = sweep(poly2, x0, ws, sides, precision=self.dps)
            margin2 = min(d_bc, d_ca) - d_ab
            crossing = all(e_bc in path.crossed_edges for path in paths)
            rec = LevelRecord(
                level=len(self.tris),
                q=float(q),
                height=float(H),
                eps=float(eps),
                dist_cs=float(m["dist_cs"]),
                gap_sa=float(m["gap_sa"]),
                side_gap=float(m["side_gap"]),
                alpha=float(m["alpha"]),
                gamma=float(m["gamma"]),
                gamma_excess=float(m["gamma"] - mpmath.pi / 2),
                alpha_minus_gamma=float(m["alpha"] - m["gamma"]),
                new_margin=float(margin2),
                crossings_ok=crossing,
                retries=attempt,
                log=log,
            )
            if rec.passed:
                self.levels.append(rec)
                self.markers.append((b, c))
                self.next_margin = margin2
                self._relabel(a2, b2, c2)
                return poly2, e_ab
            log.append({"q": float(q), "reason": "geodesic checks failed", "margin": float(margin2), "crossing": crossing})
            del self.V[base:]
            self.tris.pop()
            q *= mpmath.mpf(1.5)
        raise ConditionUnsatisfiable(f"level {len(self.tris) + 1} failed after {p.max_retries} tries: {log[-1]}")

    def _relabel(self, a2, b2, c2):
        # new nearest edge is a'b'; keeping the label order keeps the turning
        # sense, swapping a' and b' reverses it for the next level
        if self.p.turn == "alternate":
            self.labels = (c2, b2, a2)
        else:
            self.labels = (c2, a2, b2)


def _cross(u, v):
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def _point_on_edge(poly: Polytope, i: int, j: int, t: float) -> SurfacePoint:
    e = poly.edge_id(i, j)
    f = int(poly.edge_facets[e, 0])
    tri = [int(v) for v in poly.facets[f]]
    return SurfacePoint(f, tuple((1 - t) if v == i else (t if v == j else 0.0) for v in tri))


def spiral_tower(p: SpiralTowerParams) -> SpiralTower:
    """Build the tower level by level, checking each level with geodesics.

    A level is accepted when the inequality chain of the construction holds
    (``delta(c, s) < eps/2``, ``delta(s, a') - delta(a, a') < eps/2`` and
    ``delta(b, b')(sin gamma - sin alpha) > eps``, with ``pi/2 < gamma <
    alpha``), the new nearest edge is strictly nearest, and the shortest
    paths from ``x0`` to sample points of it cross the previous nearest
    edge. Failing levels are retried with ``q`` multiplied by 1.5.

    Raises
    ------
    ConditionUnsatisfiable
        When a level cannot be accepted within ``max_retries`` tries.
    """
    dps = p.dps or int(40 + 4 * p.n_triangles * math.log10(p.q))
    with mpmath.workdps(dps):
        return _build(p)


def _build(p: SpiralTowerParams) -> SpiralTower:
    bld = _Builder(p)
    poly = bld.polytope()
    x0 = vertex_point(poly, 0)
    for _ in range(p.n_triangles - 1):
        poly, _ = bld.add_level(poly, x0)
    _, b, c = bld.labels
    top = poly.edge_id(b, c)
    markers = [poly.edge_id(u, v) for u, v in bld.markers]
    return SpiralTower(poly, x0, top, markers, bld.levels, p, bld.dps, list(bld.tris))


# -- measurement ----------------------------------------------------------------


@dataclass
class TowerPath:
    path: object
    w: SurfacePoint
    s: float
    level_phi: list[float]  # unwrapped angle (turns) at each marker crossing
    level_dphi: list[float]  # between consecutive marker crossings
    tail_dphi: float  # from the last marker crossing to the top edge
    gamma_sum: float
    crosses_markers: bool


def tower_path(tower: SpiralTower) -> TowerPath:
    """Shortest path from ``x0`` to the top edge and its spiral statistics."""
    poly = tower.poly
    d, w, path = distance_to_edge_set(poly, tower.x0, [tower.top_edge], precision=tower.precision, return_path=True)
    if path is None or len(path.xyz) < 2:
        raise ConditionUnsatisfiable("no path to the top edge")
    a = path.xyz[0]
    b = path.xyz[-1]
    if len(path.xyz) == 2:
        # a single segment lies on its own axis
        s_val = 0.0
    else:
        s_val = spiralling_number(path, a, b).s
    # angle at each marker crossing, read off the exact per-corner increments
    corner_phi = _corner_phi(path.xyz, a, b)
    level_phi = []
    order = []
    for e in tower.markers:
        if e in path.crossed_edges:
            k = path.crossed_edges.index(e)
            order.append(k)
            level_phi.append(corner_phi[k + 1])
    dphi = [level_phi[k + 1] - level_phi[k] for k in range(len(level_phi) - 1)]
    tail = corner_phi[-1] - level_phi[-1] if level_phi else corner_phi[-1] - corner_phi[0]
    td = turning_data(path, poly, geodesic=False)
    crosses = len(order) == len(tower.markers) and order == sorted(order)
    return TowerPath(path, w, s_val, level_phi, dphi, tail, td.gamma_sum, crosses)


def _corner_phi(xyz, a, b):
    """Unwrapped angle (turns) at every path vertex; endpoints use the adjacent segment."""
    e = (b - a) / np.linalg.norm(b - a)
    t = np.eye(3)[int(np.argmin(np.abs(e)))]
    e1 = np.cross(e, t)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e, e1)
    w = xyz - a
    # endpoints sit on the axis; nudge them along their segments
    w = w.copy()
    w[0] = w[0] + 1e-6 * (w[1] - w[0])
    w[-1] = w[-1] + 1e-6 * (w[-2] - w[-1])
    pr = np.stack([w @ e1, w @ e2], axis=1)
    phi = [math.atan2(pr[0, 1], pr[0, 0])]
    for k in range(1, len(pr)):
        p0, p1 = pr[k - 1], pr[k]
        phi.append(phi[-1] + math.atan2(p0[0] * p1[1] - p0[1] * p1[0], float(p0 @ p1)))
    return [x / (2 * math.pi) for x in phi]
