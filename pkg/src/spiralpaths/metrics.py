"""Statistics of polygonal paths on polytope boundaries.

Total curvature, per-corner turning data, the spiralling number around the
endpoint axis, the unit-vector certificate bounding the curvature of a path
whose facet normals lie in a cap, and an audit of the curvature bound for
polytopes squeezed between two concentric balls.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AxisDegenerate, DegenerateSegment, NotNormalized
from .geodesic import SurfacePath
from .mesh import TOL_BALL, TOL_COPLANAR, Polytope, circumscribed_ball, inscribed_ball

SCHEMA = "spiralpaths.metrics/1"
TOL_AXIS = 1e-9
TOL_LAMBDA = 1e-8


def _angle(u: np.ndarray, w: np.ndarray) -> float:
    """Angle between two vectors, accurate near 0 and pi."""
    return math.atan2(float(np.linalg.norm(np.cross(u, w))), float(np.dot(u, w)))


@dataclass
class TurningData:
    corners: np.ndarray
    directions: np.ndarray
    turn_angles: np.ndarray
    facet_normals: np.ndarray | None = None
    lambdas: np.ndarray | None = None
    lambda_residuals: np.ndarray | None = None
    normal_gaps: np.ndarray | None = None
    segment_facets: list[int] | None = None

    @property
    def gamma_sum(self) -> float:
        return float(np.sum(self.normal_gaps)) if self.normal_gaps is not None else float("nan")


def _merge_coplanar(poly, xyz, seg_f):
    """Drop crossings of edges between coplanar facets (they carry no turn)."""
    keep_pts = [xyz[0]]
    keep_f = [seg_f[0]]
    for k in range(1, len(seg_f)):
        f, g = keep_f[-1], seg_f[k]
        if f != g and _angle(poly.facet_normals[f], poly.facet_normals[g]) < TOL_COPLANAR:
            continue
        keep_pts.append(xyz[k])
        keep_f.append(g)
    keep_pts.append(xyz[-1])
    return np.array(keep_pts), keep_f


def turning_data(path, poly: Polytope | None = None, *, geodesic: bool | None = None) -> TurningData:
    """Directions, turning angles and facet-normal data of a path.

    ``path`` is a SurfacePath or an (n, 3) array of corners. Normals are
    filled in when the facets of the segments are known. The residual of
    ``x_i - x_{i+1} = lambda_i (u_i + u_{i+1})`` is only meaningful for
    locally straight paths; it is computed for certified geodesics or when
    ``geodesic=True``.
    """
    seg_f = None
    if isinstance(path, SurfacePath):
        xyz = np.asarray(path.xyz, dtype=float)
        if poly is not None and len(path.segment_facets) == len(xyz) - 1:
            seg_f = list(path.segment_facets)
        if geodesic is None:
            geodesic = path.certified
    else:
        xyz = np.asarray(path, dtype=float)
        if poly is not None:
            seg_f = [_segment_facet(poly, xyz[k], xyz[k + 1]) for k in range(len(xyz) - 1)]
    if seg_f is not None:
        xyz, seg_f = _merge_coplanar(poly, xyz, seg_f)
    d = np.diff(xyz, axis=0)
    n = np.linalg.norm(d, axis=1)
    # per segment: the smallest step representable near its endpoints
    scale = np.maximum(np.abs(xyz[:-1]).max(axis=1), np.abs(xyz[1:]).max(axis=1))
    if np.any(n <= 1e-15 * scale + 1e-300):
        raise DegenerateSegment("zero-length segment in path")
    x = d / n[:, None]
    xi = np.array([_angle(x[k], x[k + 1]) for k in range(len(x) - 1)])
    td = TurningData(corners=xyz, directions=x, turn_angles=xi, segment_facets=seg_f)
    if seg_f is not None:
        u = poly.facet_normals[seg_f]
        td.facet_normals = u
        td.normal_gaps = np.array([_angle(u[k], u[k + 1]) for k in range(len(u) - 1)])
        if geodesic:
            lam = np.full(len(xi), np.nan)
            res = np.full(len(xi), np.nan)
            for k in range(len(xi)):
                s = u[k] + u[k + 1]
                ss = float(np.dot(s, s))
                if ss < 1e-24:
                    continue
                dx = x[k] - x[k + 1]
                lam[k] = float(np.dot(dx, s)) / ss
                res[k] = float(np.linalg.norm(dx - lam[k] * s))
            td.lambdas = lam
            td.lambda_residuals = res
    return td


def _segment_facet(poly: Polytope, p, q) -> int:
    m = 0.5 * (np.asarray(p) + np.asarray(q))
    return int(np.argmin(np.abs(poly.facet_normals @ m - poly.facet_offsets)))


def total_curvature(td: TurningData) -> float:
    return float(np.sum(td.turn_angles))


def interior_angle_sum_curvature(corners) -> float:
    """Sum of (pi - interior angle) over the corners, computed directly."""
    z = np.asarray(corners, dtype=float)
    return float(sum(math.pi - _angle(z[k - 1] - z[k], z[k + 1] - z[k]) for k in range(1, len(z) - 1)))


def closed_total_curvature(polygon) -> float:
    """Sum of exterior angles of a closed polygon (wrapping around)."""
    z = np.asarray(polygon, dtype=float)
    if len(z) < 3:
        raise DegenerateSegment("need at least 3 vertices")
    d = np.roll(z, -1, axis=0) - z
    n = np.linalg.norm(d, axis=1)
    if np.any(n <= 1e-15 * max(1.0, float(np.abs(z).max()))):
        raise DegenerateSegment("repeated vertex")
    x = d / n[:, None]
    return float(sum(_angle(x[k - 1], x[k]) for k in range(len(x))))


# ---------------------------------------------------------------------------
# spiralling number


@dataclass
class SpiralReport:
    axis: tuple[np.ndarray, np.ndarray]
    phi: np.ndarray  # in turns
    arclength: np.ndarray
    s: float
    axis_degenerate: bool = False
    segment_dphi: np.ndarray | None = field(default=None, repr=False)


def _plane_frame(e: np.ndarray):
    t = np.eye(3)[int(np.argmin(np.abs(e)))]
    e1 = np.cross(e, t)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(e, e1)


def spiralling_number(path, a, b) -> SpiralReport:
    """Net turns of ``path`` around the oriented line through ``a`` and ``b``.

    The angle along a straight segment changes by the signed angle between
    the projected endpoints (a line not through the origin sweeps less than
    half a turn), so the unwrapping is exact; segments are subdivided for the
    ``phi`` samples so that consecutive samples differ by less than a
    quarter turn. The endpoints themselves sit on the axis, so ``s`` compares
    the samples at arc-length ``max(1e-7, 1e-6 * length)`` from each end,
    capped at a thousandth of the end segment so that paths spanning many
    orders of magnitude keep their first and last segments.
    """
    xyz = np.asarray(path.xyz if isinstance(path, SurfacePath) else path, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ax = b - a
    La = float(np.linalg.norm(ax))
    if La == 0:
        raise AxisDegenerate("a and b coincide")
    e = ax / La
    e1, e2 = _plane_frame(e)
    seg = np.linalg.norm(np.diff(xyz, axis=0), axis=1)
    total = float(seg.sum())
    if total == 0.0:
        raise AxisDegenerate("path too short")
    off = max(1e-7, 1e-6 * total)
    off0 = min(off, 1e-3 * seg[0])
    off1 = min(off, 1e-3 * seg[-1])
    # cut the path to [off0, total - off1]
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    pts = [_at(xyz, cum, off0)]
    arcs = [off0]
    for k in range(1, len(xyz) - 1):
        if off0 < cum[k] < total - off1:
            pts.append(xyz[k])
            arcs.append(cum[k])
    pts.append(_at(xyz, cum, total - off1))
    arcs.append(total - off1)
    pts = np.array(pts)

    w = pts - a
    proj = np.stack([w @ e1, w @ e2], axis=1)
    rad = np.linalg.norm(proj, axis=1)
    # relative to the magnitude of the terms summed into the projection,
    # which sets its rounding error (a tall thin path stays resolvable)
    mag = np.abs(w) @ np.abs(e1) + np.abs(w) @ np.abs(e2)
    on_axis = rad <= TOL_AXIS * mag + 1e-300
    if np.all(on_axis):
        raise AxisDegenerate("path lies on the axis")
    degenerate = bool(np.any(on_axis))
    phi = [math.atan2(proj[0, 1], proj[0, 0])]
    arc_s = [arcs[0]]
    dphi = []
    last = 0
    for k in range(1, len(pts)):
        if on_axis[k]:
            continue
        p0, p1 = proj[last], proj[k]
        cr = p0[0] * p1[1] - p0[1] * p1[0]
        dt = float(p0 @ p1)
        if on_axis[last] or (abs(cr) <= TOL_AXIS * rad[last] * rad[k] and dt < 0):
            degenerate = True
        step = math.atan2(cr, dt)
        dphi.append(step)
        m = int(math.ceil(abs(step) / (math.pi / 2 - 1e-9)))
        if m > 1:
            for s in range(1, m):
                q = p0 + (p1 - p0) * s / m
                phi.append(phi[-1] + _wrap(math.atan2(q[1], q[0]) - phi[-1]))
                arc_s.append(arcs[last] + (arcs[k] - arcs[last]) * s / m)
        phi.append(phi[-1] + _wrap(math.atan2(p1[1], p1[0]) - phi[-1]))
        arc_s.append(arcs[k])
        last = k
    phi = np.array(phi) / (2 * math.pi)
    return SpiralReport(
        axis=(a, b),
        phi=phi,
        arclength=np.array(arc_s),
        s=float(abs(phi[-1] - phi[0])),
        axis_degenerate=degenerate,
        segment_dphi=np.array(dphi) / (2 * math.pi),
    )


def _wrap(x: float) -> float:
    return (x + math.pi) % (2 * math.pi) - math.pi


def _at(xyz, cum, s):
    k = int(np.clip(np.searchsorted(cum, s) - 1, 0, len(xyz) - 2))
    L = cum[k + 1] - cum[k]
    t = 0.0 if L == 0 else (s - cum[k]) / L
    return xyz[k] + t * (xyz[k + 1] - xyz[k])


# ---------------------------------------------------------------------------
# unit-vector certificate


@dataclass
class Lemma1Certificate:
    v: np.ndarray
    eta: float
    bound: float


def min_norm_point(U: np.ndarray, tol: float = 1e-14, max_iter: int = 1000) -> np.ndarray:
    """Point of conv(rows of U) nearest to the origin (Wolfe's method)."""
    U = np.asarray(U, dtype=float)
    k0 = int(np.argmin(np.einsum("ij,ij->i", U, U)))
    S = [k0]
    lam = np.array([1.0])
    x = U[k0].copy()
    for _ in range(max_iter):
        g = U @ x
        j = int(np.argmin(g))
        if g[j] >= x @ x - tol * max(1.0, float(np.max(np.abs(U)))) ** 2 or j in S:
            return x
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            A = U[S]
            # affine minimizer over the current corral
            M = np.block([[A @ A.T, np.ones((len(S), 1))], [np.ones((1, len(S))), np.zeros((1, 1))]])
            rhs = np.zeros(len(S) + 1)
            rhs[-1] = 1.0
            mu = np.linalg.lstsq(M, rhs, rcond=None)[0][:-1]
            if np.all(mu > tol):
                lam = mu
                x = mu @ A
                break
            # step toward mu until a weight hits zero
            neg = mu <= tol
            ratios = lam[neg] / np.maximum(lam[neg] - mu[neg], 1e-300)
            theta = float(np.min(ratios)) if ratios.size else 1.0
            theta = min(max(theta, 0.0), 1.0)
            lam = lam + theta * (mu - lam)
            keep = lam > tol
            S = [s for s, kp in zip(S, keep) if kp]
            lam = lam[keep]
            lam = lam / lam.sum()
            x = lam @ U[S]
    return x


def lemma1_certificate(td_or_normals) -> Lemma1Certificate:
    """Unit ``v`` maximizing ``min_i u_i . v`` and the bound ``pi / eta``.

    The optimum is the direction of the point of conv(u_i) nearest to the
    origin; its distance to the origin is the optimal ``eta``.
    """
    U = td_or_normals.facet_normals if isinstance(td_or_normals, TurningData) else td_or_normals
    U = np.atleast_2d(np.asarray(U, dtype=float))
    p = min_norm_point(U)
    n = float(np.linalg.norm(p))
    if n <= 1e-12:
        m = U.mean(axis=0)
        v = m / np.linalg.norm(m) if np.linalg.norm(m) > 1e-12 else U[0] / np.linalg.norm(U[0])
        eta = float(np.min(U @ v))
        return Lemma1Certificate(v, min(eta, 0.0), math.inf)
    v = p / n
    eta = float(np.min(U @ v))
    return Lemma1Certificate(v, eta, math.pi / eta if eta > 0 else math.inf)


# ---------------------------------------------------------------------------
# curvature-bound audit


@dataclass
class Theorem2Report:
    r: float
    R: float
    r_inscribed: float
    path_length: float
    total_curvature: float
    bound: float
    shadow_segments: list[tuple[float, float]]
    shadow_points: np.ndarray
    per_segment_eta: list[float]
    per_segment_curvature: list[float]
    per_segment_lemma_eta: list[float]
    min_shadow_ratio: float
    flags: dict[str, bool]

    @property
    def k(self) -> int:
        return len(self.shadow_segments)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def as_dict(self) -> dict:
        return {
            "r": self.r,
            "R": self.R,
            "r_inscribed": self.r_inscribed,
            "length": self.path_length,
            "t": self.total_curvature,
            "bound": self.bound,
            "k": self.k,
            "per_segment_eta": list(self.per_segment_eta),
            "per_segment_t": list(self.per_segment_curvature),
            "min_shadow_ratio": self.min_shadow_ratio,
            "flags": dict(self.flags),
        }


def _first_exit(p, q, s_lo, vhat, rr):
    """Smallest s in [s_lo, 1] with dist(p + s(q-p), ray(vhat)) >= rr, or None."""
    d = q - p

    def f(s):
        x = p + s * d
        lam = float(x @ vhat)
        dd = float(x @ x) - (lam * lam if lam > 0 else 0.0)
        return dd - rr * rr

    if f(s_lo) >= 0:
        return s_lo
    dv = float(d @ vhat)
    pp, pd, ddd = float(p @ p), float(p @ d), float(d @ d)
    pv = float(p @ vhat)
    roots = []
    # f is |x|^2 - rr^2 behind the origin and |x|^2 - (x.v)^2 - rr^2 in front,
    # a quadratic in s on each side
    for A, Bc, C in ((ddd, 2 * pd, pp - rr * rr), (ddd - dv * dv, 2 * (pd - pv * dv), pp - pv * pv - rr * rr)):
        if abs(A) < 1e-300:
            if abs(Bc) > 0:
                roots.append(-C / Bc)
            continue
        disc = Bc * Bc - 4 * A * C
        if disc < 0:
            continue
        sq = math.sqrt(disc)
        roots.extend([(-Bc - sq) / (2 * A), (-Bc + sq) / (2 * A)])
    for s in sorted(roots):
        if s_lo < s <= 1.0 and f(s) >= -1e-12 * max(1.0, rr * rr):
            return s
    return 1.0 if f(1.0) >= 0 else None


def shadow_decomposition(xyz: np.ndarray, r: float):
    """Points v_1 = a, v_2, ... where the path leaves the shadow of v_i.

    Returns the breakpoints as (segment index, parameter) pairs and their
    coordinates; the last entry is the end of the path.
    """
    rr = r / 2
    n = len(xyz) - 1
    cuts = [(0, 0.0)]
    pts = [xyz[0]]
    k, s = 0, 0.0
    while True:
        v = pts[-1]
        vhat = v / float(np.linalg.norm(v))
        found = None
        kk, ss = k, s
        while kk < n:
            hit = _first_exit(xyz[kk], xyz[kk + 1], ss, vhat, rr)
            if hit is not None and (kk, hit) != (k, s):
                found = (kk, hit)
                break
            kk, ss = kk + 1, 0.0
        if found is None:
            cuts.append((n - 1, 1.0))
            pts.append(xyz[-1])
            return cuts, np.array(pts)
        k, s = found
        cuts.append((k, s))
        pts.append(xyz[k] + s * (xyz[k + 1] - xyz[k]))
        if k == n - 1 and s >= 1.0:
            return cuts, np.array(pts)


def theorem2_audit(poly: Polytope, path: SurfacePath, *, tol: float = 1e-8) -> Theorem2Report:
    """Check every inequality of the curvature-bound argument on one path.

    ``poly`` must satisfy ``Q`` inside the unit ball centred at the origin.
    The inner radius is the largest ball *centred at the origin* inside
    ``Q`` (the smallest facet-plane offset), since the argument needs both
    balls concentric; the Chebyshev radius is reported alongside.
    """
    _, R = circumscribed_ball(poly)
    rad = float(np.max(np.linalg.norm(poly.vertices, axis=1)))
    if rad > 1 + TOL_BALL * poly.scale:
        raise NotNormalized(f"polytope reaches radius {rad} > 1")
    r = float(np.min(poly.facet_offsets))
    _, r_in = inscribed_ball(poly)
    td = turning_data(path, poly, geodesic=False)
    t = total_curvature(td)
    xyz = td.corners
    seg_f = td.segment_facets
    L = float(np.linalg.norm(np.diff(xyz, axis=0), axis=1).sum())
    bound = 4 * math.pi**2 / r**2

    cuts, vpts = shadow_decomposition(xyz, r)
    segs = []
    etas, lemma_etas, curv = [], [], []
    min_ratio = math.inf
    for i in range(len(cuts) - 1):
        (k0, s0), (k1, s1) = cuts[i], cuts[i + 1]
        v = vpts[i]
        vhat = v / np.linalg.norm(v)
        last = k1 if s1 > 0 else k1 - 1
        fids = [seg_f[m] for m in range(k0, max(last, k0) + 1)]
        u = poly.facet_normals[fids]
        eta = float(np.min(u @ vhat))
        etas.append(eta)
        min_ratio = min(min_ratio, eta - r / 2)
        # corners strictly inside the piece
        corner_ids = [m for m in range(k0 + 1, last + 1) if (m > k0 or s0 == 0)]
        corner_ids = [m for m in corner_ids if 1 <= m <= len(td.turn_angles)]
        ti = float(sum(td.turn_angles[m - 1] for m in corner_ids))
        curv.append(ti)
        lemma_etas.append(lemma1_certificate(u).eta)
        a0 = _arc(xyz, k0, s0)
        a1 = _arc(xyz, k1, s1)
        segs.append((a0, a1))
    k = len(segs)
    flags = {
        "length_lt_pi": L < math.pi,
        "t_lt_bound": t < bound,
        "k_lt_2pi_over_r": k < 2 * math.pi / r + 1,
        "shadow_eta": all(e >= r / 2 - tol for e in etas),
        "segment_lemma1": all(c < math.pi / e for c, e in zip(curv, etas) if e > 0),
    }
    return Theorem2Report(r, R, r_in, L, t, bound, segs, vpts, etas, curv, lemma_etas, min_ratio, flags)


def _arc(xyz, k, s):
    seg = np.linalg.norm(np.diff(xyz, axis=0), axis=1)
    return float(seg[:k].sum() + s * seg[k])


# ---------------------------------------------------------------------------
# reports


def path_report(poly: Polytope, path: SurfacePath, a=None, b=None, *, audit: bool = False) -> dict:
    """JSON-ready record of a path's statistics."""
    td = turning_data(path, poly)
    a = path.xyz[0] if a is None else a
    b = path.xyz[-1] if b is None else b
    out = {
        "schema": SCHEMA,
        "length": float(path.length),
        "t": total_curvature(td),
        "xi": [float(x) for x in td.turn_angles],
        "gamma_sum": td.gamma_sum,
        "certified": bool(path.certified),
        "ties": bool(path.ties),
    }
    try:
        out["s"] = spiralling_number(path, a, b).s
    except AxisDegenerate:
        out["s"] = 0.0
    if td.facet_normals is not None:
        c = lemma1_certificate(td)
        out["lemma1"] = {"v": c.v.tolist(), "eta": c.eta, "bound": c.bound}
    if audit:
        out["theorem2"] = theorem2_audit(poly, path).as_dict()
    return out


SWEEP_COLUMNS = ["trial", "r", "R", "length", "t", "bound", "k", "pass"]


def csv_rows(rows: list[dict], columns=SWEEP_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({c: (repr(v) if isinstance(v, float) else v) for c, v in row.items()})
    return buf.getvalue()
