"""Random polytopes squeezed between two concentric balls."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInput, GenerationFailure, InvalidMesh, InvalidParams
from ..mesh import Polytope, convex_hull

MAX_RETRIES = 100


@dataclass(frozen=True)
class AnnulusParams:
    """Target inner radius ``r`` in (0, 1), sample count and seed.

    ``forced_points`` are added to the random sample as given (they are
    expected to lie on the unit sphere).
    """

    r: float
    n_points: int = 24
    seed: int = 0
    forced_points: tuple | None = None


def _sphere(rng: np.random.Generator, n: int) -> np.ndarray:
    x = rng.normal(size=(n, 3))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def annulus_polytope(p: AnnulusParams) -> Polytope:
    """Hull of points on the unit sphere with every facet plane at distance >= r.

    Facets that come too close to the origin are pushed out by adding the
    sphere point in the direction of their normal, which cuts them off.
    """
    if not 0 < p.r < 1:
        raise InvalidParams("r must lie in (0, 1)")
    rng = np.random.default_rng(p.seed)
    pts = [] if p.forced_points is None else [np.asarray(x, dtype=float) for x in p.forced_points]
    n_rand = max(p.n_points - len(pts), 0)
    P = np.vstack([np.array(pts).reshape(-1, 3), _sphere(rng, n_rand)])
    for _ in range(MAX_RETRIES):
        try:
            poly = convex_hull(P)
        except (DegenerateInput, InvalidMesh):
            P = np.vstack([P, _sphere(rng, 4)])
            continue
        bad = poly.facet_offsets < p.r
        if not bad.any():
            return poly
        P = np.vstack([P, poly.facet_normals[bad]])
    raise GenerationFailure(f"could not reach inner radius {p.r} in {MAX_RETRIES} rounds")
