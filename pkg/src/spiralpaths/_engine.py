"""Exact point-to-point / point-to-edge geodesics by window propagation.

A window is a straight bundle of unfolded rays from the source image that
crosses one edge in an interval. Windows are expanded best-first by a lower
bound on the length of any completion. On a convex surface no shortest path
passes through a vertex, so vertices are never used as pseudo-sources; they
only carry the best distance seen so far, and a window is discarded when
every point of its interval is reached strictly faster through one of the
edge endpoints.

The arithmetic is generic: coordinates may be floats or ``mpmath`` numbers,
``sqrt`` comes from the numeric context.
"""

from __future__ import annotations

import heapq
import math
import weakref
from dataclasses import dataclass

from .errors import NoConvergence

MAX_WINDOWS = 2_000_000
TRIM_SCAN = 24

_cache: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


@dataclass
class Candidate:
    length: object
    window: int  # -1 for a same-facet segment
    facet: int  # facet holding the final segment
    t2: tuple  # target image in the frame of ``window``
    target: int


class Engine:
    def __init__(self, poly, precision: int | None = None):
        self.poly = poly
        if precision is not None:
            import mpmath

            self.mp = mpmath.mp.clone()
            self.mp.dps = precision
            if poly.hp_vertices is not None:
                coords = [tuple(self.mp.mpf(c) for c in p) for p in poly.hp_vertices]
            else:
                coords = [tuple(self.mp.mpf(float(c)) for c in p) for p in poly.vertices]
            self.sqrt = self.mp.sqrt
            self.num = self.mp.mpf
            self.eps = self.mp.mpf(10) ** (-(precision - 6))
            self.inf = self.mp.inf
        else:
            self.mp = None
            coords = [tuple(float(c) for c in p) for p in poly.vertices]
            self.sqrt = math.sqrt
            self.num = float
            self.eps = 1e-12
            self.inf = math.inf
        self.coords = coords
        self.facets = [tuple(int(v) for v in f) for f in poly.facets]
        self.facet_edges = [tuple(int(e) for e in fe) for fe in poly.facet_edges]
        self.edges = [tuple(int(v) for v in e) for e in poly.edges]
        self.edge_facets = [tuple(int(f) for f in ef) for ef in poly.edge_facets]
        sq = self.sqrt
        self.edge_len = []
        for i, j in self.edges:
            p, q = coords[i], coords[j]
            self.edge_len.append(sq((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + (p[2] - q[2]) ** 2))
        self._opp: dict = {}
        lo = [min(p[k] for p in coords) for k in range(3)]
        hi = [max(p[k] for p in coords) for k in range(3)]
        diam = sq(sum((hi[k] - lo[k]) ** 2 for k in range(3)))
        self.scale = max(self.num(1), diam)
        self.tol = self.eps * self.scale

    # -- local geometry -------------------------------------------------
    def opposite(self, e: int, f: int):
        """Vertex of ``f`` off edge ``e`` and its image in the frame of ``e``.

        The frame puts ``edges[e][0]`` at the origin, ``edges[e][1]`` at
        ``(L, 0)`` and the opposite vertex of ``f`` at positive ``y``.
        """
        key = (e, f)
        hit = self._opp.get(key)
        if hit is not None:
            return hit
        i, j = self.edges[e]
        tri = self.facets[f]
        o = tri[0] + tri[1] + tri[2] - i - j
        c = self.coords
        L = self.edge_len[e]
        u = [c[j][k] - c[i][k] for k in range(3)]
        w = [c[o][k] - c[i][k] for k in range(3)]
        # projection and cross product; sqrt(|w|^2 - ox^2) cancels badly on
        # long thin facets
        ox = (u[0] * w[0] + u[1] * w[1] + u[2] * w[2]) / L
        cx = u[1] * w[2] - u[2] * w[1]
        cy = u[2] * w[0] - u[0] * w[2]
        cz = u[0] * w[1] - u[1] * w[0]
        oy = self.sqrt(cx * cx + cy * cy + cz * cz) / L
        hit = (o, ox, oy)
        self._opp[key] = hit
        return hit

    def point3(self, facet: int, bary) -> tuple:
        c = self.coords
        tri = self.facets[facet]
        w = [self.num(b) for b in bary]
        return tuple(w[0] * c[tri[0]][k] + w[1] * c[tri[1]][k] + w[2] * c[tri[2]][k] for k in range(3))

    def image(self, e: int, f_to: int, facet: int, bary) -> tuple:
        """2D image, in the frame of (e, f_to), of a point of ``facet``.

        ``facet`` is either ``f_to`` (positive side) or the other facet of
        ``e`` (negative side).
        """
        i, j = self.edges[e]
        L = self.edge_len[e]
        tri = self.facets[facet]
        o, ox, oy = self.opposite(e, facet)
        if facet != f_to:
            oy = -oy
        x = self.num(0)
        y = self.num(0)
        for v, w in zip(tri, bary):
            w = self.num(w)
            if v == j:
                x += w * L
            elif v == o:
                x += w * ox
                y += w * oy
        return (x, y)

    def dist3(self, p, q):
        return self.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + (p[2] - q[2]) ** 2)

    def seg_point_dist3(self, a, b, p):
        d = [b[k] - a[k] for k in range(3)]
        w = [p[k] - a[k] for k in range(3)]
        dd = d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
        t = (w[0] * d[0] + w[1] * d[1] + w[2] * d[2]) / dd if dd > 0 else 0
        t = 0 if t < 0 else (1 if t > 1 else t)
        return self.sqrt(sum((w[k] - t * d[k]) ** 2 for k in range(3)))

    def edge_point3(self, e: int, x) -> tuple:
        i, j = self.edges[e]
        t = x / self.edge_len[e]
        p, q = self.coords[i], self.coords[j]
        return tuple(p[k] + t * (q[k] - p[k]) for k in range(3))

    # -- search ---------------------------------------------------------
    def search(self, sources, point_targets=(), edge_targets=(), *, edge_groups=(), cutoff=None, tie_rel=1e-9):
        """Best-first window propagation from one source point.

        ``sources``: list of (facet, bary) representations of the source.
        ``point_targets``: list of targets, each a list of (facet, bary).
        ``edge_targets``: set of edge ids; reaching any of them is a hit.
        ``edge_groups``: further edge sets, each with its own best hit.
        Returns a dict with per-target best candidates and the window store.
        """
        num = self.num
        sq = self.sqrt
        tol = self.tol
        zero = num(0)
        edges, edge_len, edge_facets = self.edges, self.edge_len, self.edge_facets
        facet_edges = self.facet_edges
        opposite = self.opposite

        n_pt = len(point_targets)
        best: list[Candidate | None] = [None] * n_pt
        runner: list[list[Candidate]] = [[] for _ in range(n_pt)]
        edge_best: Candidate | None = None
        edge_targets = set(edge_targets)
        group_of: dict[int, list[int]] = {}
        for gi, grp in enumerate(edge_groups):
            for e in grp:
                group_of.setdefault(int(e), []).append(gi)
        group_best: list[Candidate | None] = [None] * len(edge_groups)

        by_facet: dict[int, list[tuple[int, tuple]]] = {}
        targets3 = []
        for ti, reps in enumerate(point_targets):
            f0, b0 = reps[0]
            targets3.append(self.point3(f0, b0))
            for f, bary in reps:
                by_facet.setdefault(f, []).append((ti, bary))

        src3 = self.point3(*sources[0])
        use_heur = n_pt == 1 and not edge_targets and not edge_groups
        t3 = targets3[0] if use_heur else None

        def offer(ti, cand):
            cur = best[ti]
            if cur is None or cand.length < cur.length:
                if cur is not None:
                    offer_runner(ti, cur)
                best[ti] = cand
            else:
                offer_runner(ti, cand)

        def offer_runner(ti, cand):
            # keep a few near-optimal alternatives for tie detection
            lst = runner[ti]
            lst.append(cand)
            if len(lst) > 64:
                lst.sort(key=lambda c: c.length)
                del lst[32:]

        # same-facet shortcuts
        src_facets = {f for f, _ in sources}
        for ti, reps in enumerate(point_targets):
            for f, _ in reps:
                if f in src_facets:
                    d = self.dist3(src3, targets3[ti])
                    offer(ti, Candidate(d, -1, f, (), ti))
                    break
        for f, bary in sources:
            for k, e in enumerate(facet_edges[f]):
                if e in edge_targets:
                    i, j = edges[e]
                    d = self.seg_point_dist3(self.coords[i], self.coords[j], src3)
                    if edge_best is None or d < edge_best.length:
                        edge_best = Candidate(d, -1, f, (e,), -1)
                for gi in group_of.get(e, ()):
                    i, j = edges[e]
                    d = self.seg_point_dist3(self.coords[i], self.coords[j], src3)
                    if group_best[gi] is None or d < group_best[gi].length:
                        group_best[gi] = Candidate(d, -1, f, (e,), -1)

        vdist: dict[int, object] = {}
        # window: [e, f_to, b0, b1, Ix, Iy, parent, dmin]
        W: list[list] = []
        heap: list = []
        counter = 0

        def vupdate(v, d):
            cur = vdist.get(v)
            if cur is None or d < cur:
                vdist[v] = d

        def dominated(e, b0, b1, Ix, Iy):
            i, j = edges[e]
            L = edge_len[e]
            di = vdist.get(i)
            if di is not None:
                dx = b1 - Ix
                if di + b1 < sq(dx * dx + Iy * Iy) - tol:
                    return True
            dj = vdist.get(j)
            if dj is not None:
                dx = b0 - Ix
                if dj + (L - b0) < sq(dx * dx + Iy * Iy) - tol:
                    return True
            return False

        def heuristic(e, b0, b1):
            if t3 is None:
                return zero
            return self.seg_point_dist3(self.edge_point3(e, b0), self.edge_point3(e, b1), t3)

        on_edge: dict[tuple, list[int]] = {}

        def trim(e, f_to, b0, b1, Ix, Iy, L):
            # cut off the end parts of [b0, b1] where an earlier window on the
            # same edge side is strictly shorter; |I - x|^2 - |U - x|^2 is
            # linear in x, so each comparison removes a half-line
            # the most recent windows are the relevant ones; skipping older
            # ones only trims less
            for u in on_edge.get((e, f_to), ())[-TRIM_SCAN:]:
                ub0, ub1, Ux, Uy = W[u][2], W[u][3], W[u][4], W[u][5]
                lo = b0 if b0 > ub0 else ub0
                hi = b1 if b1 < ub1 else ub1
                if lo > hi:
                    continue
                A = 2 * (Ux - Ix)
                B = Ix * Ix + Iy * Iy - Ux * Ux - Uy * Uy
                slack = tol * (abs(Ix) + abs(Iy) + abs(Ux) + abs(Uy) + L)
                if A == 0:
                    if B > slack:
                        cut_lo, cut_hi = lo, hi
                    else:
                        continue
                else:
                    xs = (slack - B) / A
                    if A > 0:
                        cut_lo, cut_hi = (xs if xs > lo else lo), hi
                    else:
                        cut_lo, cut_hi = lo, (xs if xs < hi else hi)
                    if cut_lo > cut_hi:
                        continue
                if cut_lo <= b0 and cut_hi >= b1:
                    return None
                if cut_lo <= b0:
                    b0 = cut_hi
                elif cut_hi >= b1:
                    b1 = cut_lo
            return b0, b1

        def push(e, f_to, b0, b1, Ix, Iy, parent):
            nonlocal counter, edge_best
            L = edge_len[e]
            if b0 < zero:
                b0 = zero
            if b1 > L:
                b1 = L
            if b1 - b0 < -tol:
                return
            if b1 < b0:
                b0 = b1 = (b0 + b1) / 2
            i, j = edges[e]
            if b0 <= tol:
                vupdate(i, sq(Ix * Ix + Iy * Iy))
            if b1 >= L - tol:
                dx = L - Ix
                vupdate(j, sq(dx * dx + Iy * Iy))
            cut = trim(e, f_to, b0, b1, Ix, Iy, L)
            if cut is None:
                return
            b0, b1 = cut
            if Ix < b0:
                dx = b0 - Ix
                dmin = sq(dx * dx + Iy * Iy)
            elif Ix > b1:
                dx = b1 - Ix
                dmin = sq(dx * dx + Iy * Iy)
            else:
                dmin = -Iy
            if dominated(e, b0, b1, Ix, Iy):
                return
            idx = len(W)
            W.append([e, f_to, b0, b1, Ix, Iy, parent, dmin])
            on_edge.setdefault((e, f_to), []).append(idx)
            if e in edge_targets and (edge_best is None or dmin < edge_best.length):
                x = Ix if b0 <= Ix <= b1 else (b0 if Ix < b0 else b1)
                edge_best = Candidate(dmin, idx, f_to, (x, zero), -1)
            for gi in group_of.get(e, ()):
                if group_best[gi] is None or dmin < group_best[gi].length:
                    x = Ix if b0 <= Ix <= b1 else (b0 if Ix < b0 else b1)
                    group_best[gi] = Candidate(dmin, idx, f_to, (x, zero), -1)
            prio = dmin + heuristic(e, b0, b1)
            if cutoff is not None and prio > cutoff:
                return
            heapq.heappush(heap, (prio, counter, idx))
            counter += 1

        for f, bary in sources:
            tri = self.facets[f]
            for k, e in enumerate(facet_edges[f]):
                if abs(num(bary[k])) <= 1e-15:
                    continue  # source lies on this edge
                f_to = edge_facets[e][0] if edge_facets[e][1] == f else edge_facets[e][1]
                Ix, Iy = self.image(e, f_to, f, bary)
                push(e, f_to, zero, edge_len[e], Ix, Iy, -1)

        def done_bound():
            vals = []
            for ti in range(n_pt):
                if best[ti] is None:
                    return None
                vals.append(best[ti].length)
            if edge_targets:
                if edge_best is None:
                    return None
                vals.append(edge_best.length)
            for c in group_best:
                if c is None:
                    return None
                vals.append(c.length)
            if not vals:
                return None
            return max(vals)

        processed = 0
        while heap:
            prio, _, idx = heapq.heappop(heap)
            bound = done_bound()
            if bound is not None and prio > bound * (1 + tie_rel) + tol:
                break
            e, f_to, b0, b1, Ix, Iy, parent, dmin = W[idx]
            if dominated(e, b0, b1, Ix, Iy):
                continue
            processed += 1
            if processed > MAX_WINDOWS:
                raise NoConvergence("window budget exhausted")
            L = edge_len[e]
            o, ox, oy = opposite(e, f_to)

            # targets inside f_to
            for ti, bary in by_facet.get(f_to, ()):
                Tx, Ty = self.image(e, f_to, f_to, bary)
                dy = Ty - Iy
                if dy <= 0:
                    continue
                cx = Ix + (Tx - Ix) * (-Iy) / dy
                if b0 - tol <= cx <= b1 + tol:
                    dx = Tx - Ix
                    d = sq(dx * dx + dy * dy)
                    offer(ti, Candidate(d, idx, f_to, (Tx, Ty), ti))

            dy = oy - Iy
            if dy <= 0:
                continue
            t_o = Ix + (ox - Ix) * (-Iy) / dy
            if b0 - tol <= t_o <= b1 + tol:
                dx = ox - Ix
                vupdate(o, sq(dx * dx + dy * dy))
            i, j = edges[e]
            # child across (i, o): rays through [b0, min(b1, t_o)]
            if t_o > b0:
                hi = b1 if b1 < t_o else t_o
                self._child(push, idx, e, f_to, i, o, (zero, zero), (ox, oy), b0, hi, Ix, Iy)
            if t_o < b1:
                lo = b0 if b0 > t_o else t_o
                self._child(push, idx, e, f_to, o, j, (ox, oy), (L, zero), lo, b1, Ix, Iy)

        return {
            "best": best,
            "runner": runner,
            "edge_best": edge_best,
            "group_best": group_best,
            "windows": W,
            "processed": processed,
        }

    def _child(self, push, idx, e, f_to, u, w, pu, pw, x0, x1, Ix, Iy):
        """Map rays through [x0, x1] on edge e onto segment (u, w) of f_to."""
        tol = self.tol
        ce = self.facet_edge(f_to, u, w)
        p, q = self.edges[ce]
        if p == u:
            P2, Q2 = pu, pw
        else:
            P2, Q2 = pw, pu
        Lc = self.edge_len[ce]
        ux = ((Q2[0] - P2[0]) / Lc, (Q2[1] - P2[1]) / Lc)
        uy = (-ux[1], ux[0])
        # third vertex of f_to relative to ce must fall on the negative side
        tri = self.facets[f_to]
        third = tri[0] + tri[1] + tri[2] - p - q
        i, j = self.edges[e]
        if third == i:
            T2 = (self.num(0), self.num(0))
        elif third == j:
            T2 = (self.edge_len[e], self.num(0))
        else:
            _, ox, oy = self.opposite(e, f_to)
            T2 = (ox, oy)
        if (T2[0] - P2[0]) * uy[0] + (T2[1] - P2[1]) * uy[1] > 0:
            uy = (-uy[0], -uy[1])
        rx, ry = Ix - P2[0], Iy - P2[1]
        Jx = rx * ux[0] + ry * ux[1]
        Jy = rx * uy[0] + ry * uy[1]
        if Jy > -tol:
            return  # rays graze along the child edge
        # hit points of the two boundary rays on the child line (y' = 0)
        xs = []
        for x in (x0, x1):
            sx, sy = x - P2[0], -P2[1]
            Sx = sx * ux[0] + sy * ux[1]
            Sy = sx * uy[0] + sy * uy[1]
            dy = Sy - Jy
            if dy <= 0:
                xs.append(None)
                continue
            xs.append(Jx + (Sx - Jx) * (-Jy) / dy)
        if xs[0] is None or xs[1] is None:
            # a boundary ray runs parallel to the child edge: clamp to the segment end
            ends = [c for c in xs if c is not None]
            if not ends:
                return
            lo_x, hi_x = min(ends + [self.num(0)]), max(ends + [Lc])
        else:
            lo_x, hi_x = (xs[0], xs[1]) if xs[0] <= xs[1] else (xs[1], xs[0])
        f_next = self.edge_facets[ce][0] if self.edge_facets[ce][1] == f_to else self.edge_facets[ce][1]
        push(ce, f_next, lo_x, hi_x, Jx, Jy, idx)

    def facet_edge(self, f: int, u: int, w: int) -> int:
        tri = self.facets[f]
        for k in range(3):
            if tri[k] != u and tri[k] != w:
                return self.facet_edges[f][k]
        raise ValueError("edge not in facet")

    # -- reconstruction -------------------------------------------------
    def trace(self, windows, cand, src3, tgt3):
        """Crossing points (edge, x) from source to target for a candidate."""
        if cand.window < 0:
            return []
        out = []
        idx = cand.window
        e, f_to, b0, b1, Ix, Iy, parent, _ = windows[idx]
        Tx, Ty = cand.t2
        dy = Ty - Iy
        x = Ix + (Tx - Ix) * (-Iy) / dy if dy != 0 else Tx
        out.append((e, f_to, x))
        while parent >= 0:
            ce = e
            cx = x
            pe, pf_to, pb0, pb1, PIx, PIy, pparent, _ = windows[parent]
            # image of the crossing point (on ce) in the parent frame
            p, q = self.edges[ce]
            L = self.edge_len[pe]
            i, j = self.edges[pe]
            o, ox, oy = self.opposite(pe, pf_to)
            pos = {i: (self.num(0), self.num(0)), j: (L, self.num(0)), o: (ox, oy)}
            t = cx / self.edge_len[ce]
            X = (pos[p][0] + t * (pos[q][0] - pos[p][0]), pos[p][1] + t * (pos[q][1] - pos[p][1]))
            dy = X[1] - PIy
            x = PIx + (X[0] - PIx) * (-PIy) / dy if dy != 0 else X[0]
            x = min(max(x, self.num(0)), L)
            e, f_to, parent = pe, pf_to, pparent
            out.append((e, f_to, x))
        out.reverse()
        return out


def engine_for(poly, precision: int | None = None) -> Engine:
    per = _cache.get(poly)
    if per is None:
        per = _cache[poly] = {}
    eng = per.get(precision)
    if eng is None:
        eng = per[precision] = Engine(poly, precision)
    return eng
