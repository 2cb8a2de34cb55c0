"""Build towers of growing height and print how far their top paths spiral."""

import sys

from spiralpaths.constructions.tower import SpiralTowerParams
from spiralpaths.experiments import spiral_summary

heights = [int(a) for a in sys.argv[1:]] or [2, 4, 6, 8, 10, 12]
print(f"{'triangles':>9}  {'s(P)':>7}  {'sum gamma':>9}  per-level turns")
for n in heights:
    summ, _, _ = spiral_summary(SpiralTowerParams(n_triangles=n))
    rates = " ".join(f"{d:.3f}" for d in summ.level_dphi)
    print(f"{n:>9}  {summ.s:7.3f}  {summ.gamma_sum:9.3f}  {rates}")

alt, _, _ = spiral_summary(SpiralTowerParams(n_triangles=8, turn="alternate"))
print("alternating sense:", " ".join(f"{d:+.3f}" for d in alt.level_dphi), f"s = {alt.s:.3f}")
