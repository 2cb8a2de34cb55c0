"""Slab bodies whose shortest paths turn by more than a full turn.

The chain is built from sampled smooth pieces:

* two parabolas ``x2 = x1**2`` in the planes ``x3 = -eps`` and ``x3 = eps``,
* the quarter circle ``L`` in the plane ``x1 = 0`` joining the parabola
  vertices ``v1 = (0, 0, -eps)`` and ``v2 = (0, 0, eps)`` around the outside,
* the side surface swept by ``L`` translated along a circular arc ``L'``
  of sagitta ``lprime_bulge`` (a cylinder when the sagitta is zero).

``Y_alpha`` is the hull of these samples with the lower region rotated down
by ``alpha`` about the line through ``v1``, clipped at ``x2 = g``. Three small
cones attached on alternating sides of ``L`` bend the shortest path out of
the symmetry plane. Mirroring the clipped body across ``x2 = g`` gives
``Delta``, on which the path between the two images of ``b1`` is the doubled
path.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.spatial import ConvexHull

from ..errors import (
    ConeOverlap,
    ConeTouchesFace,
    InvalidParams,
    NoConvergence,
    NotConvexAfterGlue,
)
from ..geodesic import SurfacePath, SurfacePoint, distance_to_edge_set, locate, shortest_path
from ..mesh import Polytope, convex_hull, hull_vertex_ids
from ..metrics import total_curvature, turning_data

EPS_MAX = math.sqrt(2.0) / (8.0 * math.pi)
TOL_GLUE = 1e-9
CORE = 2.0  # half width of the uniformly sampled part of the parabolas
PROBE_ALPHA = 6e-4  # slant of the default search probe, close to the emitted one


@dataclass(frozen=True)
class DeltaParams:
    """Parameters of the slab chain.

    Parameters
    ----------
    eps : float
        Half thickness of the slab, in ``(0, sqrt(2) / (8 pi))``.
    alpha : float
        Slant of the lower face, in ``[0, pi / 4)``; 0 gives the unslanted body.
    g : float
        Cut coordinate ``x2 = g``.
    parabola_extent : float, optional
        Largest ``|x1|`` sampled on the parabolas; defaults to the value at
        which the lower parabola reaches the cut.
    n_samples : int
        Samples per parabola. Also sets the side grid density unless
        ``n_columns`` / ``n_arc`` are given.
    lprime_bulge : float
        Sagitta of the sweep arc over ``|x1| <= 1/2``.
    cone_targets : tuple of float
        Positions of the three cones along ``L`` as arc fractions from ``v2``;
        the spacing must be equal.
    cone_pullback : float
        Distance of each cone apex from the side surface along its normal;
        0 disables the cones.
    cone_lateral : float
        ``|x1|`` of the surface point below each apex. Cones 1 and 3 sit on
        the ``+x1`` side, cone 2 on the ``-x1`` side.
    """

    eps: float = 0.05
    alpha: float = 0.05
    g: float = 400.0
    parabola_extent: float | None = None
    n_samples: int = 400
    lprime_bulge: float = 0.01
    cone_targets: tuple = (0.3, 0.5, 0.7)
    cone_pullback: float = 0.0
    cone_lateral: float = 0.01
    n_columns: int | None = None
    n_arc: int | None = None

    def validate(self) -> None:
        if not 0.0 < self.eps < EPS_MAX:
            raise InvalidParams(f"eps must lie in (0, {EPS_MAX:.7f})")
        if not 0.0 <= self.alpha < math.pi / 4:
            raise InvalidParams("alpha must lie in [0, pi/4)")
        if self.g <= 1.0:
            raise InvalidParams("g must exceed 1")
        if self.n_samples < 8:
            raise InvalidParams("n_samples must be at least 8")
        if not 0.0 <= self.lprime_bulge < 0.25:
            raise InvalidParams("lprime_bulge must lie in [0, 1/4)")
        t1, t2, t3 = self.cone_targets
        if not 0.0 < t1 < t2 < t3 < 1.0:
            raise InvalidParams("cone targets must satisfy 0 < t1 < t2 < t3 < 1")
        if abs((t2 - t1) - (t3 - t2)) > 1e-12:
            raise InvalidParams("cone targets must be equally spaced")
        if self.cone_pullback < 0.0 or not 0.0 <= self.cone_lateral < 0.5:
            raise InvalidParams("cone offsets out of range")
        if self.parabola_extent is not None and self.parabola_extent ** 2 * math.cos(self.alpha) < self.g:
            raise InvalidParams("parabola_extent does not reach the cut")

    @property
    def columns(self) -> int:
        return self.n_columns or max(8, 2 * (self.n_samples // 20))

    @property
    def arc_steps(self) -> int:
        return self.n_arc or max(8, self.n_samples // 10)


# ---------------------------------------------------------------------------
# smooth pieces


def quarter_circle(eps: float, t) -> np.ndarray:
    """Points ``(x2, x3)`` of ``L`` at arc fractions ``t`` (0 at ``v2``, 1 at ``v1``)."""
    phi = 0.75 * math.pi + 0.5 * math.pi * np.asarray(t, dtype=float)
    rho = math.sqrt(2.0) * eps
    return np.stack([eps + rho * np.cos(phi), rho * np.sin(phi)], axis=-1)


def bulge(b: float, x1):
    """Sweep arc ``L'`` as an ``x2`` offset: circular, sagitta ``b`` at ``|x1| = 1/2``."""
    x1 = np.asarray(x1, dtype=float)
    if b == 0.0:
        return np.zeros_like(x1)
    rad = (0.25 + b * b) / (2.0 * b)
    return rad - np.sqrt(rad * rad - x1 * x1)


def side_point(p: DeltaParams, x1: float, t: float) -> np.ndarray:
    y, z = quarter_circle(p.eps, t)
    return np.array([x1, y + float(bulge(p.lprime_bulge, x1)), z])


def side_normal(p: DeltaParams, x1: float, t: float) -> np.ndarray:
    """Outer unit normal of the swept side surface."""
    b = p.lprime_bulge
    if b == 0.0:
        dx = np.array([1.0, 0.0, 0.0])
    else:
        rad = (0.25 + b * b) / (2.0 * b)
        dx = np.array([1.0, x1 / math.sqrt(rad * rad - x1 * x1), 0.0])
    phi = 0.75 * math.pi + 0.5 * math.pi * t
    dt = np.array([0.0, -math.sin(phi), math.cos(phi)])
    n = np.cross(dx, dt)
    n /= np.linalg.norm(n)
    # the centre of L lies on the +x2 side
    return n if n[1] < 0 else -n


def slant(alpha: float, pts) -> np.ndarray:
    """Rotate points of the plane ``x3 = -eps`` down by ``alpha`` about the line through ``v1``."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    eps = -pts[:, 2]
    return np.column_stack([pts[:, 0], pts[:, 1] * math.cos(alpha), -eps - pts[:, 1] * math.sin(alpha)])


def mirror(g: float, pts) -> np.ndarray:
    pts = np.array(pts, dtype=float)
    pts[..., 1] = 2.0 * g - pts[..., 1]
    return pts


def markers(p: DeltaParams) -> dict:
    """``v1``, ``v2`` and the midpoint ``v3`` of ``L``; ``b1`` and its slanted image."""
    e = p.eps
    b1 = np.array([0.0, 0.125, -e])
    return {
        "v1": np.array([0.0, 0.0, -e]),
        "v2": np.array([0.0, 0.0, e]),
        "v3": np.array([0.0, e * (1.0 - math.sqrt(2.0)), 0.0]),
        "b1": b1,
        "b1_prime": slant(p.alpha, b1)[0],
    }


# ---------------------------------------------------------------------------
# polyhedral bodies


@dataclass
class SlabBody:
    """A sampled body of the chain.

    ``points`` are the hull input rows (cone apices last); ``cone_vertices``
    maps each cone to its vertex in ``poly``.
    """

    poly: Polytope
    points: np.ndarray
    params: DeltaParams
    G_edges: list[int]
    b1_prime: SurfacePoint
    v_markers: dict
    cone_vertices: list[int] = field(default_factory=list)
    cone_apices: np.ndarray | None = None

    def __iter__(self):
        yield from (self.poly, self.G_edges, self.b1_prime, self.v_markers)

    def cone_facets(self) -> list[set[int]]:
        F = self.poly.facets
        return [set(np.nonzero((F == v).any(axis=1))[0].tolist()) for v in self.cone_vertices]


def _symmetric_grid(n: int, half: float) -> np.ndarray:
    """``n`` points at half-step offsets in ``(-half, half)``; none at 0 for even ``n``."""
    h = 2.0 * half / n
    return -half + h * (np.arange(n) + 0.5)


def _parabola_grid(n: int, ext: float) -> np.ndarray:
    """Symmetric abscissae: half uniform on ``|x1| < CORE``, half geometric beyond.

    A uniform grid over the whole extent leaves the neighbourhood of the
    quarter circle unresolved once ``g`` is large.
    """
    if ext <= 2 * CORE:
        return _symmetric_grid(n, ext)
    n_core = n // 2
    n_out = max((n - n_core) // 2, 1)
    core = _symmetric_grid(n_core, CORE)
    out = CORE * (ext / CORE) ** (np.arange(1, n_out + 1) / n_out)
    return np.sort(np.concatenate([core, out, -out]))


def sample_points(p: DeltaParams) -> np.ndarray:
    """Hull input for ``Y_alpha`` (without cones), already clipped at ``x2 = g``."""
    p.validate()
    e, a, g = p.eps, p.alpha, p.g
    ext = p.parabola_extent or math.sqrt(g / math.cos(a))
    xs = _parabola_grid(p.n_samples, ext)

    top_x = xs[xs * xs < g]
    top_x = np.concatenate([top_x, [-math.sqrt(g), math.sqrt(g)]])
    top = np.column_stack([top_x, top_x ** 2, np.full_like(top_x, e)])

    lim = g / math.cos(a)
    low_x = xs[xs * xs < lim]
    low_x = np.concatenate([low_x, [-math.sqrt(lim), math.sqrt(lim)]])
    low = np.column_stack([low_x, low_x ** 2, np.full_like(low_x, -e)])

    cols = np.concatenate([_symmetric_grid(p.columns, 0.5), [-0.5, 0.5]])
    ts = np.linspace(0.0, 1.0, p.arc_steps + 1)
    arc = quarter_circle(e, ts)
    side = np.array([[x, y + float(bulge(p.lprime_bulge, x)), z] for x in cols for y, z in arc])
    side_low = side[np.isclose(side[:, 2], -e)]
    side_up = side[~np.isclose(side[:, 2], -e)]

    # the unslanted lower parabola below the cut stays inside the hull
    low_keep = low[low[:, 1] < g]
    return np.vstack([top, side_up, slant(a, np.vstack([side_low, low])), low_keep])


def _marked(poly: Polytope, p: DeltaParams, pts: np.ndarray, extra=None) -> SlabBody:
    V = poly.vertices
    tol = 1e-9 * p.g
    on_cut = np.abs(V[:, 1] - p.g) < tol
    on_top = np.abs(V[:, 2] - p.eps) < 1e-12 * p.g
    ids = set(np.nonzero(on_cut & on_top)[0].tolist())
    G = [k for k, (i, j) in enumerate(poly.edges) if int(i) in ids and int(j) in ids]
    if not G:
        raise InvalidParams("cut edge not found; parabola sampling does not reach x2 = g")
    mk = markers(p)
    b1p = locate(poly, mk["b1_prime"])
    return SlabBody(poly, pts, p, G, b1p, mk)


def build_Y_alpha(p: DeltaParams) -> SlabBody:
    """Sampled ``Y_alpha`` clipped at ``x2 = g``; ``alpha = 0`` gives ``X``.

    Iterating the result yields ``(poly, G_edges, b1_prime, v_markers)``.
    """
    pts = sample_points(p)
    return _marked(convex_hull(pts), p, pts)


def cone_apices(p: DeltaParams) -> np.ndarray:
    """Apex positions: side point at ``(+-cone_lateral, t_i)`` pushed out along the normal."""
    out = []
    for k, t in enumerate(p.cone_targets):
        x1 = p.cone_lateral if k != 1 else -p.cone_lateral
        out.append(side_point(p, x1, t) + p.cone_pullback * side_normal(p, x1, t))
    return np.array(out)


def attach_cones(Y: SlabBody, p: DeltaParams | None = None) -> SlabBody:
    """Add the three attached cones to a body built by :func:`build_Y_alpha`.

    Raises
    ------
    ConeOverlap
        Two cones share a point of the original surface.
    ConeTouchesFace
        A cone reaches the top face or the slanted bottom face.
    """
    p = p or Y.params
    if p.cone_pullback == 0.0:
        return Y
    W = cone_apices(p)
    poly = Y.poly
    seen = []
    for k, w in enumerate(W):
        vis = poly.facet_normals @ w - poly.facet_offsets > 1e-12 * p.g
        if not vis.any():
            raise InvalidParams(f"cone {k + 1} apex is not outside the body")
        seen.append(vis)
    top_n = np.array([0.0, 0.0, 1.0])
    bot_n = np.array([0.0, -math.sin(p.alpha), -math.cos(p.alpha)])
    flat = (poly.facet_normals @ top_n > 1 - 1e-12) | (poly.facet_normals @ bot_n > 1 - 1e-12)
    flat_v = set(poly.facets[flat].ravel().tolist())
    for k, vis in enumerate(seen):
        if set(poly.facets[vis].ravel().tolist()) & flat_v:
            raise ConeTouchesFace(f"cone {k + 1} reaches a planar face")
    for i in range(3):
        for j in range(i + 1, 3):
            if (seen[i] & seen[j]).any():
                raise ConeOverlap(f"cones {i + 1} and {j + 1} overlap")
    pts = np.vstack([Y.points, W])
    hull = convex_hull(pts)
    body = _marked(hull, p, pts)
    src = hull_vertex_ids(hull)
    n0 = len(Y.points)
    body.cone_vertices = [int(np.nonzero(src == n0 + k)[0][0]) for k in range(3)]
    body.cone_apices = W
    return body


@dataclass
class DeltaBody:
    """The doubled body with the two marked points."""

    poly: Polytope
    b1_prime: SurfacePoint
    b1_doubleprime: SurfacePoint
    half: SlabBody
    volume_excess: float

    def __iter__(self):
        yield from (self.poly, self.b1_prime, self.b1_doubleprime)


def build_delta(p: DeltaParams, half: SlabBody | None = None) -> DeltaBody:
    """Glue the (coned) clipped body to its mirror image across ``x2 = g``.

    Raises
    ------
    NotConvexAfterGlue
        The union of the two halves is not convex (its hull is larger).
    """
    if half is None:
        half = attach_cones(build_Y_alpha(p), p)
    pts = np.vstack([half.points, mirror(p.g, half.points)])
    vol_half = ConvexHull(half.points).volume
    vol = ConvexHull(pts).volume
    excess = vol / (2.0 * vol_half) - 1.0
    if excess > TOL_GLUE:
        raise NotConvexAfterGlue(f"glued hull exceeds the union by a relative {excess:.3g}")
    poly = convex_hull(pts)
    mk = half.v_markers
    a = locate(poly, mk["b1_prime"])
    b = locate(poly, mirror(p.g, mk["b1_prime"]))
    return DeltaBody(poly, a, b, half, float(excess))


# ---------------------------------------------------------------------------
# measurements


def polyline_gap(xyz: np.ndarray, x) -> float:
    """Distance from a point to a polyline."""
    xyz = np.asarray(xyz, dtype=float)
    x = np.asarray(x, dtype=float)
    a, b = xyz[:-1], xyz[1:]
    d = b - a
    dd = np.maximum((d * d).sum(axis=1), 1e-300)
    t = np.clip(((x - a) * d).sum(axis=1) / dd, 0.0, 1.0)
    return float(np.linalg.norm(a + t[:, None] * d - x, axis=1).min())


@dataclass
class KMeasure:
    """Shortest path from ``b1'`` to the cut edge and its turning."""

    path: SurfacePath
    length: float
    t: float
    vertex_gaps: dict
    crosses: list[bool]
    near_L: bool = True  # passes v1, v2, v3 within the cone-scaled tolerance

    @property
    def verified(self) -> bool:
        """The path crosses all three cones and still follows ``L``."""
        return bool(self.crosses) and all(self.crosses) and self.near_L


def vertex_tolerance(p: DeltaParams) -> float:
    """How far the coned path may stray from ``v1``, ``v2``, ``v3``.

    Mesh tolerance ``eps / 100`` plus twice the cone height; a path that
    leaves ``L`` by more has found another route and no longer turns round
    the quarter circle.
    """
    return 0.01 * p.eps + 2.0 * p.cone_pullback


def measure_K(body: SlabBody) -> KMeasure:
    dist, _, path = distance_to_edge_set(body.poly, body.b1_prime, body.G_edges, return_path=True)
    t = total_curvature(turning_data(path, body.poly))
    gaps = {k: polyline_gap(path.xyz, body.v_markers[k]) for k in ("v1", "v2", "v3")}
    used = set(int(f) for f in path.segment_facets)
    crosses = [bool(used & fs) for fs in body.cone_facets()]
    near = max(gaps.values()) <= vertex_tolerance(body.params)
    return KMeasure(path, float(dist), t, gaps, crosses, near)


def apex_path_lengths(p: DeltaParams, n: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """``|P'(e)|`` for ``e`` on the upper parabola, ``0 < e1 < 1/2``, on the unslanted body.

    The path from ``b1`` to ``e`` is the shortest one; from ``e`` it runs
    straight in the top face to the cut.
    """
    body = build_Y_alpha(replace(p, alpha=0.0, cone_pullback=0.0))
    b1 = locate(body.poly, body.v_markers["b1"])
    e1 = 0.5 * np.arange(1, n + 1) / (n + 1)
    out = []
    for x in e1:
        e = np.array([x, x * x, p.eps])
        sp = shortest_path(body.poly, b1, locate(body.poly, e))
        out.append(sp.length + (p.g - x * x))
    return e1, np.array(out)


@dataclass
class DeltaReport:
    """Measured turning of the chain for one parameter set.

    ``beta`` is only reported (not None) when the path crosses all three
    cones. ``t_bar_formula`` is ``2 (pi + beta - alpha)``.
    """

    params: dict
    t_tilde: float
    t_K: float
    beta: float | None
    t_bar: float | None
    passes_2pi: bool
    crosses: list[bool]
    vertex_gaps: dict
    vertex_gaps_tilde: dict
    shortcut: bool | None = None
    t_bar_formula: float | None = None
    length_K: float = float("nan")
    length_bar: float | None = None
    note: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def delta_report(
    p: DeltaParams, *, glue: bool = True, tilde: KMeasure | None = None, precision: int | None = None
) -> tuple[DeltaReport, DeltaBody | None]:
    """Measure ``t(P~)`` on ``Y_alpha``, ``t(K)`` with cones and ``t(K-bar)`` on ``Delta``.

    ``precision`` (mpmath digits) is passed to the shortest path on ``Delta``;
    double precision loses the small features near the far image of ``b1``
    once ``g`` is in the millions.
    """
    Y = build_Y_alpha(p)
    if tilde is None:
        tilde = measure_K(Y)
    body = attach_cones(Y, p)
    mk = measure_K(body) if body is not Y else tilde
    crosses_all = mk.verified
    beta = mk.t - (math.pi - p.alpha)
    rep = DeltaReport(
        params=asdict(p),
        t_tilde=tilde.t,
        t_K=mk.t,
        beta=beta if crosses_all or p.cone_pullback == 0.0 else None,
        t_bar=None,
        passes_2pi=False,
        crosses=mk.crosses,
        vertex_gaps=mk.vertex_gaps,
        vertex_gaps_tilde=tilde.vertex_gaps,
        t_bar_formula=2.0 * mk.t,
        length_K=mk.length,
    )
    if p.cone_pullback > 0.0 and not all(mk.crosses):
        rep.note = "placement failure: the path misses cone(s) " + ",".join(
            str(k + 1) for k, c in enumerate(mk.crosses) if not c
        )
    elif p.cone_pullback > 0.0 and not mk.near_L:
        rep.note = "placement failure: the path leaves L (vertex gap above tolerance)"
    if not glue:
        return rep, None
    try:
        D = build_delta(p, body)
    except NotConvexAfterGlue as exc:
        rep.note = (rep.note + "; " if rep.note else "") + str(exc)
        return rep, None
    try:
        kb = shortest_path(D.poly, D.b1_prime, D.b1_doubleprime, precision=precision)
    except NoConvergence as exc:
        rep.note = (rep.note + "; " if rep.note else "") + f"doubled path failed: {exc}"
        return rep, D
    rep.length_bar = kb.length
    rep.t_bar = total_curvature(turning_data(kb, D.poly))
    rep.shortcut = _crosses_glue_low(kb.xyz, p)
    if rep.shortcut:
        rep.note = (rep.note + "; " if rep.note else "") + "shortest path crosses the glue plane below the top face"
    rep.passes_2pi = bool(rep.t_bar > 2.0 * math.pi + 1e-3 and not rep.shortcut)
    return rep, D


def _crosses_glue_low(xyz: np.ndarray, p: DeltaParams) -> bool:
    y = xyz[:, 1] - p.g
    for k in range(len(xyz) - 1):
        if y[k] == 0.0 or y[k] * y[k + 1] < 0.0:
            s = 0.0 if y[k] == 0.0 else y[k] / (y[k] - y[k + 1])
            z = xyz[k, 2] + s * (xyz[k + 1, 2] - xyz[k, 2])
            return bool(z < p.eps - 1e-9 * p.g)
    return True


# ---------------------------------------------------------------------------
# parameter search


def doubling_alpha(g: float, eps: float, extra: float = 0.0) -> float:
    """Smallest slant for which the doubled path cannot shortcut below the top.

    Solves ``g (1 / cos(alpha) - 1) = 1/4 + pi eps / sqrt(2) + extra``: the
    detour through the bottom must exceed the way round the quarter circle.
    """
    c = 0.25 + math.pi * eps / math.sqrt(2.0) + extra
    return math.acos(g / (g + c))


def g_for_alpha(alpha: float, eps: float, extra: float = 0.0) -> float:
    """Inverse of :func:`doubling_alpha`."""
    c = 0.25 + math.pi * eps / math.sqrt(2.0) + extra
    return c / (1.0 / math.cos(alpha) - 1.0)


@dataclass(frozen=True)
class SearchSpace:
    """Coordinates of the search with their start values, steps and bounds."""

    start: tuple = (0.002, 0.01, 0.3, 0.2)  # pullback, lateral, half spread, bulge
    step: tuple = (0.0005, 0.004, 0.05, 0.02)
    lower: tuple = (0.0002, 0.0, 0.05, 0.0)
    upper: tuple = (0.02, 0.45, 0.45, 0.245)
    min_step: tuple = (2e-5, 2e-4, 0.005, 0.002)
    names: tuple = ("cone_pullback", "cone_lateral", "spread", "lprime_bulge")


@dataclass
class DeltaSearchResult:
    """Outcome of :func:`delta_search`.

    ``trace`` has one entry per evaluation (cache hits are not counted).
    ``final`` is the report on the emitted body, measured at ``final_params``
    with the doubled path recomputed in high precision.
    """

    best_probe: dict
    final_params: dict | None
    final: DeltaReport | None
    trace: list
    evaluations: int
    gap_trajectory: list  # best beta - alpha after every evaluation
    note: str = ""
    final_checks: list = field(default_factory=list)  # probe points tried on the final half body
    delta: DeltaBody | None = field(default=None, repr=False)

    @property
    def passes_2pi(self) -> bool:
        return bool(self.final is not None and self.final.passes_2pi)

    def as_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("delta", "final")}
        d["final"] = None if self.final is None else self.final.as_dict()
        d["passes_2pi"] = self.passes_2pi
        return d


def _probe_params(base: DeltaParams, x) -> DeltaParams:
    pb, lat, spread, bul = (float(v) for v in x)
    return replace(
        base,
        cone_pullback=pb,
        cone_lateral=lat,
        cone_targets=(0.5 - spread, 0.5, 0.5 + spread),
        lprime_bulge=bul,
    )


def delta_search(
    budget: int = 500,
    *,
    base: DeltaParams | None = None,
    space: SearchSpace | None = None,
    g_max: float = 1e7,
    final_samples: int = 120,
    target_gap: float = 1e-3,
    precision: int | None = 30,
    verify: bool = True,
    seed: int = 0,
    n_candidates: int = 5,
) -> DeltaSearchResult:
    """Coordinate search for cone placement and bulge maximizing ``beta``.

    Evaluations run on a probe body (``base``) with fewer samples than the
    emitted one. ``beta`` does not depend on ``g``, but it does depend on the
    slant (a flat bottom lets the coned path leave ``L``), so the default
    probe uses a slant close to the final one. The slant of the emitted
    body is then chosen as small as the doubling condition allows,
    ``alpha = (beta - target_gap / 2) / 2`` capped below by
    :func:`doubling_alpha` at ``g_max``, so that ``t(K-bar) = 2 (pi + beta -
    alpha)`` clears ``2 pi + target_gap`` when ``beta`` is large enough. The
    emitted ``Delta`` is re-measured from scratch, with the doubled path
    computed by an independent high precision ``shortest_path`` call.

    The coordinate search halves its steps when no move improves and
    restarts around the best point (seeded jitter) until the budget of
    evaluations is spent. The best ``n_candidates`` probe points are then
    checked in turn on the final half body; the first that still crosses
    all three cones along ``L`` is glued and verified.
    """
    if base is None:
        a0 = PROBE_ALPHA
        base = DeltaParams(eps=0.056, alpha=a0, g=g_for_alpha(a0, 0.056, 0.01), n_samples=100, n_columns=40, n_arc=40)
    space = space or SearchSpace()
    cache: dict = {}
    trace: list = []
    gaps: list = []
    best_x, best_beta = None, -math.inf

    def evaluate(x):
        nonlocal best_x, best_beta
        key = tuple(round(v, 9) for v in x)
        if key in cache:
            return cache[key]
        if len(trace) >= budget:
            return None
        p = _probe_params(base, x)
        rec = dict(zip(space.names, key))
        beta = None
        try:
            p.validate()
            body = attach_cones(build_Y_alpha(p), p)
            mk = measure_K(body)
            rec["crosses"] = mk.crosses
            rec["max_vertex_gap"] = max(mk.vertex_gaps.values())
            if mk.verified:
                beta = mk.t - (math.pi - p.alpha)
                rec["status"] = "ok"
            else:
                rec["status"] = "misses cones" if not all(mk.crosses) else "leaves L"
        except (InvalidParams, ConeOverlap, ConeTouchesFace, NoConvergence) as exc:
            rec["status"] = type(exc).__name__
        rec["beta"] = beta
        if beta is not None and beta > best_beta:
            best_x, best_beta = tuple(x), beta
        trace.append(rec)
        # alpha the emitted body would get with the best beta so far
        gaps.append(None if best_x is None else best_beta - _final_alpha(best_beta))
        cache[key] = beta
        return beta

    def _final_alpha(beta):
        # halfway between the doubling bound and the largest slant that
        # still clears the target
        a_min = doubling_alpha(g_max, base.eps, extra=0.01)
        return max(a_min, min(0.5 * (beta - target_gap / 2), 0.05))

    rng = np.random.default_rng(seed)
    x = list(space.start)
    while len(trace) < budget:
        step = list(space.step)
        cur = evaluate(x)
        stalled = len(trace)
        while len(trace) < budget and any(st >= m for st, m in zip(step, space.min_step)):
            improved = False
            for k in range(len(x)):
                if step[k] < space.min_step[k]:
                    continue
                for sgn in (1.0, -1.0):
                    y = list(x)
                    y[k] = min(max(x[k] + sgn * step[k], space.lower[k]), space.upper[k])
                    if y[k] == x[k]:
                        continue
                    b = evaluate(y)
                    if b is not None and (cur is None or b > cur):
                        x, cur, improved = y, b, True
                        break
                if len(trace) >= budget:
                    break
            if not improved:
                step = [st / 2 for st in step]
        if len(trace) == stalled and best_x is not None:
            break  # every neighbour was cached: nothing new to learn
        # restart around the best point found so far
        centre = best_x if best_x is not None else space.start
        x = [
            float(min(max(c + rng.uniform(-2, 2) * st, lo), hi))
            for c, st, lo, hi in zip(centre, space.step, space.lower, space.upper)
        ]

    result = DeltaSearchResult(
        best_probe={} if best_x is None else {**dict(zip(space.names, best_x)), "beta": best_beta},
        final_params=None,
        final=None,
        trace=trace,
        evaluations=len(trace),
        gap_trajectory=gaps,
    )
    if best_x is None:
        result.note = "no evaluation crossed all three cones"
        return result
    # the probe optimum can sit on the edge of the feasible region, so the
    # best few probe points are checked on the final half body in turn
    ranked = sorted(((b, k) for k, b in cache.items() if b is not None), reverse=True)
    checks = result.final_checks
    fp = None
    for beta, key in ranked[:n_candidates]:
        alpha = _final_alpha(beta)
        g = g_for_alpha(alpha, base.eps, extra=0.01)
        cand = replace(_probe_params(base, key), alpha=alpha, g=g, n_samples=final_samples)
        if not verify:
            fp = cand
            break
        half, _ = delta_report(cand, glue=False)
        checks.append({**dict(zip(space.names, key)), "probe_beta": beta, "beta": half.beta, "note": half.note})
        if half.beta is not None:
            fp = cand
            break
    if fp is None:
        result.note = f"none of the best {len(checks)} probe points verified on the final body"
        return result
    result.final_params = asdict(fp)
    beta = ranked[0][0] if not checks else checks[-1]["probe_beta"]
    if beta - fp.alpha <= target_gap / 2:
        result.note = f"beta {beta:.6g} leaves no room for alpha above the doubling bound at g_max"
    if not verify:
        return result
    rep, D = delta_report(fp, precision=precision)
    result.final = rep
    result.delta = D
    if rep.beta is None:
        result.note = (result.note + "; " if result.note else "") + "final body: " + (rep.note or "beta not measured")
    return result
    rep, D = delta_report(fp, precision=precision)
    result.final = rep
    result.delta = D
    if rep.beta is None:
        result.note = (result.note + "; " if result.note else "") + "final body: " + (rep.note or "beta not measured")
    return result
