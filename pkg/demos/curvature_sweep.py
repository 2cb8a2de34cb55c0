"""Small curvature-bound sweep over random annulus polytopes."""

import sys

from spiralpaths.experiments import SweepConfig, theorem2_sweep

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20
res = theorem2_sweep(SweepConfig(trials=trials, paths_per_trial=10), seed=1)
print(f"{'r':>6} {'length':>7} {'t':>7} {'bound':>8} {'k':>3}  pass")
for row in res.rows:
    print(f"{row['r']:6.3f} {row['length']:7.3f} {row['t']:7.3f} {row['bound']:8.1f} {row['k']:3d}  {row['pass']}")
print(f"violations: {res.violations}; normal-cap checks {res.lemma1_checks}, violations {res.lemma1_violations}")
