"""Turning of the slab chain: cones off, cones on, and (optionally) the glued body.

With ``--full`` the search of the command line tool is run with a small
budget and the glued body is verified in high precision (a few minutes).
"""

import math
import sys
from dataclasses import replace

from spiralpaths.constructions.delta import DeltaParams, delta_report, delta_search

base = DeltaParams(eps=0.056, alpha=0.01, g=50.0, n_samples=100, n_columns=40, n_arc=40, lprime_bulge=0.245)
plain, _ = delta_report(base, glue=False)
print(f"no cones:   t(K) - (pi - alpha) = {plain.t_K - (math.pi - base.alpha):+.2e}")
coned = replace(base, cone_pullback=0.0025, cone_lateral=0.0119, cone_targets=(0.19, 0.5, 0.81))
rep, _ = delta_report(coned, glue=False)
print(f"with cones: beta = {rep.beta:.3e}, crosses {rep.crosses}, note {rep.note!r}")

if "--full" in sys.argv:
    res = delta_search(40, seed=0)
    f = res.final
    print(f"search: best beta {res.best_probe['beta']:.3e}; emitted alpha {f.params['alpha']:.2e}, g {f.params['g']:.3g}")
    print(f"t(K-bar) - 2 pi = {f.t_bar - 2 * math.pi:+.2e}, passes: {res.passes_2pi}")
