"""Reference computations for the tests, kept independent of the package.

``unfolding_distance`` enumerates every simple facet sequence from the
source, lays it flat, and keeps a straight source-target segment when it
passes through every shared edge of the sequence. It works from raw vertex
and facet arrays so that it shares no code with the library's engine.
"""

from __future__ import annotations

import math

import numpy as np


def _cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _facets_containing(V, F, p, tol):
    out = []
    for f, tri in enumerate(F):
        A, B, C = V[tri]
        n = np.cross(B - A, C - A)
        area2 = np.linalg.norm(n)
        n = n / area2
        if abs(np.dot(p - A, n)) > tol:
            continue
        # barycentric by sub-areas
        w = [np.dot(np.cross(C - B, p - B), n), np.dot(np.cross(A - C, p - C), n), np.dot(np.cross(B - A, p - A), n)]
        if min(w) >= -tol * area2:
            out.append(f)
    return out


def _flat(V, tri):
    """2D congruent copy of a triangle with tri[0] at the origin."""
    A, B, C = V[tri]
    ex = (B - A) / np.linalg.norm(B - A)
    n = np.cross(B - A, C - A)
    ey = np.cross(n / np.linalg.norm(n), ex)
    return {int(v): np.array([np.dot(P - A, ex), np.dot(P - A, ey)]) for v, P in zip(tri, (A, B, C))}


def _attach(V, tri_new, i, j, Pi, Pj, other2d):
    """Position of the free vertex of ``tri_new`` across edge (i, j)."""
    o = [int(v) for v in tri_new if v not in (i, j)][0]
    L = np.linalg.norm(Pj - Pi)
    di = np.linalg.norm(V[o] - V[i])
    dj = np.linalg.norm(V[o] - V[j])
    along = (L * L + di * di - dj * dj) / (2 * L)
    h = math.sqrt(max(di * di - along * along, 0.0))
    ex = (Pj - Pi) / L
    ey = np.array([-ex[1], ex[0]])
    if np.dot(other2d - Pi, ey) > 0:
        ey = -ey
    return o, Pi + along * ex + h * ey


def _point2d(V, tri, img, p):
    """Image of 3D point p (lying in triangle tri) in the 2D layout img."""
    A, B, C = V[tri]
    M = np.column_stack([B - A, C - A])
    st = np.linalg.lstsq(M, p - A, rcond=None)[0]
    a, b, c = (int(v) for v in tri)
    return img[a] + st[0] * (img[b] - img[a]) + st[1] * (img[c] - img[a])


def unfolding_distance(V, F, p, q, bound=None, tol=1e-11):
    """Shortest surface distance from p to q by exhaustive unfolding."""
    V = np.asarray(V, dtype=float)
    F = np.asarray(F, dtype=np.int64)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    diam = max(np.linalg.norm(V[a] - V[b]) for a in range(len(V)) for b in range(a + 1, len(V)))
    ptol = tol * max(1.0, diam)
    edge_map = {}
    for f, tri in enumerate(F):
        for k in range(3):
            e = tuple(sorted((int(tri[k]), int(tri[(k + 1) % 3]))))
            edge_map.setdefault(e, []).append(f)
    src = _facets_containing(V, F, p, ptol)
    dst = set(_facets_containing(V, F, q, ptol))
    best = [3 * diam if bound is None else bound]
    if set(src) & dst:
        return float(np.linalg.norm(p - q))

    def dfs(f, img, S, wedge, visited):
        tri = [int(v) for v in F[f]]
        if f in dst and wedge is not None:
            T = _point2d(V, tri, img, q)
            d = T - S
            R, L = wedge
            if _cross(R, d) >= -1e-12 * np.linalg.norm(d) and _cross(d, L) >= -1e-12 * np.linalg.norm(d):
                best[0] = min(best[0], float(np.linalg.norm(d)))
        for k in range(3):
            i, j = tri[k], tri[(k + 1) % 3]
            e = tuple(sorted((i, j)))
            g = [h for h in edge_map[e] if h != f][0]
            if g in visited:
                continue
            Pi, Pj = img[i], img[j]
            # source lying on this edge: the neighbour is a start facet itself
            if wedge is None and abs(_cross(Pj - Pi, S - Pi)) <= ptol * np.linalg.norm(Pj - Pi):
                continue
            # distance from S to the portal segment prunes long sequences
            t = np.clip(np.dot(S - Pi, Pj - Pi) / np.dot(Pj - Pi, Pj - Pi), 0, 1)
            if np.linalg.norm(Pi + t * (Pj - Pi) - S) >= best[0]:
                continue
            a, b = Pi - S, Pj - S
            a = a / np.linalg.norm(a)
            b = b / np.linalg.norm(b)
            R, L = (a, b) if _cross(a, b) >= 0 else (b, a)
            if wedge is not None:
                R0, L0 = wedge
                R = R if _cross(R0, R) > 0 else R0
                L = L if _cross(L, L0) > 0 else L0
                eps = 1e-13
                inside = lambda d, W: _cross(W[0], d) >= -eps and _cross(d, W[1]) >= -eps
                if _cross(R, L) < -eps:
                    continue
                if not (inside(R, wedge) and inside(L, wedge) and inside(R, (a, b) if _cross(a, b) >= 0 else (b, a))
                        and inside(L, (a, b) if _cross(a, b) >= 0 else (b, a))):
                    continue
            third = [img[v] for v in tri if v not in (i, j)][0]
            o, Po = _attach(V, F[g], i, j, Pi, Pj, third)
            img2 = {i: Pi, j: Pj, o: Po}
            dfs(g, img2, S, (R, L), visited | {g})

    for f in src:
        tri = [int(v) for v in F[f]]
        img = _flat(V, tri)
        S = _point2d(V, tri, img, p)
        dfs(f, img, S, None, {f})
    return best[0]


def cube_corners(lo=0.0, hi=1.0):
    return np.array([[x, y, z] for x in (lo, hi) for y in (lo, hi) for z in (lo, hi)], dtype=float)


def regular_tetrahedron():
    return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)


def random_surface_point(V, F, rng):
    f = int(rng.integers(len(F)))
    w = rng.dirichlet([1.0, 1.0, 1.0])
    return f, w, w @ V[F[f]]
