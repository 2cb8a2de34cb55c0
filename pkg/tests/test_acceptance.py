"""Acceptance criteria 1 to 8.

Run under pytest (one line per criterion is printed in the terminal
summary) or directly with ``python tests/test_acceptance.py [n ...]``.
"""

from __future__ import annotations

import functools
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

sys.path.insert(0, str(Path(__file__).parent))

from oracles import cube_corners, regular_tetrahedron, unfolding_distance  # noqa: E402
from spiralpaths import io  # noqa: E402
from spiralpaths.constructions.delta import (  # noqa: E402
    DeltaParams,
    build_Y_alpha,
    delta_search,
    measure_K,
    polyline_gap,
    apex_path_lengths,
)
from spiralpaths.constructions.tower import SpiralTowerParams  # noqa: E402
from spiralpaths.experiments import SweepConfig, spiral_summary, theorem2_sweep  # noqa: E402
from spiralpaths.geodesic import locate, point_on_facet, shortest_path  # noqa: E402
from spiralpaths.mesh import convex_hull  # noqa: E402
from spiralpaths.metrics import (  # noqa: E402
    closed_total_curvature,
    lemma1_certificate,
    total_curvature,
    turning_data,
)

TWO_PI = 2.0 * math.pi
SEED = 2024


def _line(n: int, ok: bool, detail: str) -> str:
    return f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"


# ---------------------------------------------------------------------------
# 1 and 3: geodesics against the unfolding oracle


def _random_small_hull(rng):
    while True:
        poly = convex_hull(rng.normal(size=(int(rng.integers(5, 10)), 3)))
        if poly.n_facets <= 14:
            return poly


@functools.cache
def geodesic_cases():
    """Shortest paths and oracle distances on cube, tetrahedron and 50 random hulls."""
    rng = np.random.default_rng(SEED)
    polys = [convex_hull(cube_corners()), convex_hull(regular_tetrahedron())]
    polys += [_random_small_hull(rng) for _ in range(50)]
    cases = []
    t_lib = t_oracle = 0.0
    for poly in polys:
        V, F = poly.vertices, poly.facets
        for _ in range(20):
            ends = []
            for _ in range(2):
                f = int(rng.integers(len(F)))
                ends.append((f, rng.dirichlet([1.0, 1.0, 1.0]) @ V[F[f]]))
            (fa, xa), (fb, xb) = ends
            t0 = time.perf_counter()
            path = shortest_path(poly, point_on_facet(poly, fa, xa), point_on_facet(poly, fb, xb))
            t1 = time.perf_counter()
            ref = unfolding_distance(V, F, xa, xb)
            t_oracle += time.perf_counter() - t1
            t_lib += t1 - t0
            cases.append((poly, path, ref))
    return cases, t_lib, t_oracle


def criterion_1():
    cases, t_lib, t_oracle = geodesic_cases()
    worst = max(abs(p.length - ref) / ref for _, p, ref in cases)
    ok = worst <= 1e-9 and t_lib < 60.0
    return ok, f"{len(cases)} pairs, worst relative error {worst:.2e}, library {t_lib:.1f} s (oracle {t_oracle:.1f} s)"


# ---------------------------------------------------------------------------
# 2: Fenchel


def criterion_2():
    rng = np.random.default_rng(SEED + 2)
    planar_err = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 16))
        th = np.sort(rng.uniform(0.0, TWO_PI, n))
        a, b = rng.uniform(0.2, 3.0, 2)
        pts = np.column_stack([a * np.cos(th), b * np.sin(th), np.zeros(n)])
        pts = Rotation.random(random_state=rng).apply(pts) + rng.normal(size=3)
        planar_err = max(planar_err, abs(closed_total_curvature(pts) - TWO_PI))
    skew_min = math.inf
    for _ in range(100):
        pts = rng.normal(size=(int(rng.integers(4, 12)), 3))
        skew_min = min(skew_min, closed_total_curvature(pts))
    ok = planar_err <= 1e-10 and skew_min >= TWO_PI - 1e-9
    return ok, f"planar max |t - 2pi| {planar_err:.1e}, skew min t - 2pi {skew_min - TWO_PI:.3g}"


# ---------------------------------------------------------------------------
# 4 (and the shadow half of 3): curvature bound sweep


@functools.cache
def sweep_result():
    t0 = time.perf_counter()
    res = theorem2_sweep(SweepConfig(trials=200, r_min=0.2, r_max=0.9, paths_per_trial=20), seed=SEED)
    return res, time.perf_counter() - t0


def criterion_3():
    cases, _, _ = geodesic_cases()
    checks = bad = 0
    for poly, path, _ in cases:
        td = turning_data(path, poly)
        if td.facet_normals is None or len(td.turn_angles) == 0:
            continue
        cert = lemma1_certificate(td)
        if cert.eta > 0:
            checks += 1
            bad += not total_curvature(td) < cert.bound
    res, _ = sweep_result()
    checks += res.lemma1_checks
    bad += res.lemma1_violations
    return bad == 0, f"{checks} certified pieces ({res.lemma1_checks} shadow segments), {bad} violations"


def criterion_4():
    res, secs = sweep_result()
    rows = res.rows
    worst_t = max(r["t"] / r["bound"] for r in rows)
    worst_len = max(r["length"] for r in rows)
    worst_k = max(r["k"] - (TWO_PI / r["r"] + 1) for r in rows)
    rmin = min(r["r"] for r in rows)
    ok = len(rows) >= 200 and res.violations == 0 and secs < 600.0
    return ok, (
        f"{len(rows)} polytopes x 20 paths, violations {res.violations}, max t/bound {worst_t:.3g}, "
        f"max length {worst_len:.3f}, max k - (2pi/r + 1) {worst_k:.2f}, min r {rmin:.3f}, {secs:.0f} s"
    )


# ---------------------------------------------------------------------------
# 5 and 8: tower


def criterion_5():
    parts, ok = [], True
    t_n3 = 0.0
    for n, tri in ((1, 5), (2, 8), (3, 12)):
        assert tri <= 4 * n + 4
        t0 = time.perf_counter()
        summ, _, _ = spiral_summary(SpiralTowerParams(n_triangles=tri))
        if n == 3:
            t_n3 = time.perf_counter() - t0
        good = summ.s >= n and summ.levels_passed and summ.rate_ok and summ.crosses_markers
        ok &= good
        rates = ",".join(f"{d:.3f}" for d in summ.level_dphi)
        parts.append(f"n={n}: {tri} triangles s={summ.s:.3f} rates [{rates}]")
    alt, _, _ = spiral_summary(SpiralTowerParams(n_triangles=8, turn="alternate"))
    d = alt.level_dphi
    alternates = len(d) >= 2 and all(d[k] * d[k + 1] < 0 for k in range(len(d) - 1))
    ok &= alternates and t_n3 < 300.0
    parts.append(f"alternating signs {'yes' if alternates else 'no'}; n=3 in {t_n3:.1f} s")
    return ok, "; ".join(parts)


def criterion_8():
    sums = []
    for n in (2, 4, 6, 8, 10):
        summ, _, _ = spiral_summary(SpiralTowerParams(n_triangles=n))
        sums.append(summ.gamma_sum)
    ok = all(b > a for a, b in zip(sums, sums[1:]))
    return ok, "gamma sums " + ", ".join(f"{s:.3f}" for s in sums) + " for n = 2, 4, 6, 8, 10"


# ---------------------------------------------------------------------------
# 6: slab discretization


SLAB = DeltaParams(eps=0.05, alpha=0.05, g=400.0, n_samples=400)


def criterion_6():
    target = math.pi - SLAB.alpha
    ts = {}
    for n in (100, 200, 400):
        m = measure_K(build_Y_alpha(replace(SLAB, n_samples=n)))
        ts[n] = m.t
        if n == 400:
            gaps3 = max(m.vertex_gaps.values())
    err = abs(ts[400] - target)
    d1, d2 = abs(ts[200] - ts[100]), abs(ts[400] - ts[200])
    cauchy = d2 <= max(d1, 1e-9) and d2 < 5e-3
    _, lengths = apex_path_lengths(SLAB, n=20)
    order_bad = int(np.sum(np.diff(lengths) <= 0))
    # unslanted body: the path from b1 to a top point passes v1 and v2
    X = build_Y_alpha(replace(SLAB, alpha=0.0))
    top = locate(X.poly, np.array([0.0, SLAB.g / 2, SLAB.eps]))
    path = shortest_path(X.poly, locate(X.poly, X.v_markers["b1"]), top)
    gaps2 = max(polyline_gap(path.xyz, X.v_markers[k]) for k in ("v1", "v2"))
    tol = 1e-2 * SLAB.eps
    ok = err <= 5e-3 and cauchy and order_bad == 0 and gaps2 <= tol and gaps3 <= tol
    return ok, (
        f"t(P~) - (pi - alpha) = {ts[400] - target:.2e} at 400 samples; "
        f"refinement steps {d1:.1e}, {d2:.1e}; apex-path order violations {order_bad}/19; "
        f"vertex gaps {gaps2 / SLAB.eps:.1e} eps (alpha = 0), {gaps3 / SLAB.eps:.1e} eps (alpha > 0)"
    )


# ---------------------------------------------------------------------------
# 7: more than a full turn


@functools.cache
def search_result():
    t0 = time.perf_counter()
    res = delta_search(500, seed=SEED)
    return res, time.perf_counter() - t0


def criterion_7():
    res, secs = search_result()
    measured = [t["beta"] for t in res.trace if t["beta"] is not None]
    final = res.final
    # (a): every verified crossing of the three cones has beta > 0
    part_a = bool(measured) and all(b > 0 for b in measured) and (final is None or final.beta is None or final.beta > 0)
    detail = f"{res.evaluations} evaluations in {secs:.0f} s; {len(measured)} verified, min beta {min(measured, default=float('nan')):.2e}"
    # (b): re-verify the emitted mesh independently: reload from OFF, new high precision path
    part_b = False
    if final is not None:
        beta = "none" if final.beta is None else f"{final.beta:.3e}"
        detail += f"; emitted alpha {final.params['alpha']:.2e}, g {final.params['g']:.3g}, beta {beta}"
    if res.delta is not None and final is not None and final.t_bar is not None:
        D = res.delta
        reloaded = io.mesh_from_text(io.off_text(D.poly))
        a = locate(reloaded, D.b1_prime.xyz(D.poly))
        b = locate(reloaded, D.b1_doubleprime.xyz(D.poly))
        kb = shortest_path(reloaded, a, b, precision=30)
        t_re = total_curvature(turning_data(kb, reloaded))
        part_b = final.passes_2pi and t_re > TWO_PI + 1e-3
        detail += f": t(K-bar) - 2pi = {final.t_bar - TWO_PI:.2e}, re-verified {t_re - TWO_PI:.2e}"
    else:
        detail += f"; no verified mesh ({res.note}); last beta - alpha gap {res.gap_trajectory[-1]}"
    # the fallback branch of (b): a best-found report with beta > 0 and the gap trajectory
    fallback = final is not None and final.beta is not None and final.beta > 0 and bool(res.gap_trajectory)
    ok = part_a and (part_b or fallback)
    return ok, f"(a) {'ok' if part_a else 'FAILED'}, (b) {'2pi exceeded' if part_b else 'not reproduced'}; " + detail


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}


def _check(n: int) -> None:
    from conftest import ACCEPTANCE_LINES

    ok, detail = CRITERIA[n]()
    ACCEPTANCE_LINES[n] = _line(n, ok, detail)
    print(ACCEPTANCE_LINES[n])
    assert ok, ACCEPTANCE_LINES[n]


def test_criterion_1_geodesic_oracle():
    _check(1)


def test_criterion_2_fenchel():
    _check(2)


def test_criterion_3_lemma1():
    _check(3)


def test_criterion_4_curvature_bound_sweep():
    _check(4)


def test_criterion_5_spiral_tower():
    _check(5)


def test_criterion_6_slab_discretization():
    _check(6)


def test_criterion_7_exceeds_full_turn():
    _check(7)


def test_criterion_8_gamma_sum_increases():
    _check(8)


if __name__ == "__main__":
    chosen = [int(a) for a in sys.argv[1:]] or sorted(CRITERIA)
    failed = 0
    for n in chosen:
        ok, detail = CRITERIA[n]()
        print(_line(n, ok, detail), flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
