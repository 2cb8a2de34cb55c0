"""Shortest paths on convex polytopes: curvature and spiralling."""

from .errors import SpiralPathsError
from .geodesic import SurfacePath, SurfacePoint, locate, shortest_path, vertex_point
from .mesh import Polytope, ball_data, circumscribed_ball, convex_hull, inscribed_ball, normalize_to_unit_ball
from .metrics import (
    closed_total_curvature,
    lemma1_certificate,
    spiralling_number,
    theorem2_audit,
    total_curvature,
    turning_data,
)

__version__ = "0.1.0"

__all__ = [
    "Polytope",
    "SpiralPathsError",
    "SurfacePath",
    "SurfacePoint",
    "ball_data",
    "circumscribed_ball",
    "closed_total_curvature",
    "convex_hull",
    "inscribed_ball",
    "lemma1_certificate",
    "locate",
    "normalize_to_unit_ball",
    "shortest_path",
    "spiralling_number",
    "theorem2_audit",
    "total_curvature",
    "turning_data",
    "vertex_point",
]
