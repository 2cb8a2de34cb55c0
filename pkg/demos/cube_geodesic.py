"""Shortest path between opposite corners of the unit cube and its statistics."""

import math

import numpy as np

from spiralpaths import convex_hull, locate, shortest_path, total_curvature, turning_data

corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
cube = convex_hull(corners)
path = shortest_path(cube, locate(cube, [0, 0, 0]), locate(cube, [1, 1, 1]))
td = turning_data(path, cube)

print(f"length          {path.length:.12f}  (sqrt 5 = {math.sqrt(5):.12f})")
print(f"turning angles  {np.round(td.turn_angles, 10)}  (arccos 0.2 = {math.acos(0.2):.10f})")
print(f"t(P)            {total_curvature(td):.10f}")
print(f"ties            {path.ties}")
for p in path.xyz:
    print("   ", np.round(p, 12))
