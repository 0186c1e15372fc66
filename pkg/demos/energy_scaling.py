"""
Energy perturbation scales like alpha^3
=======================================

The electromagnetic energy stored in a ball around the inclusion changes by
an amount proportional to the inclusion volume.
"""

import math

from smallinc.energy import ProbeRegion, energy_scaling_fit
from smallinc.oracle import solve_many
from smallinc.scene import Ball, DipoleSource, InclusionSpec, Scene, WaveContext

wave = WaveContext(1.0, 2.0, 0.1 / math.sqrt(2.0))
scene = Scene(wave, 0.2, [InclusionSpec([0, 0, 0], Ball(0.5), 2.0, 2.0)],
              DipoleSource([0.0, 0.0, 30.0], [1.0, 0.0, 0.3]), 0.5)
alphas = [0.2, 0.1, 0.05]

# one oracle solve per scale, shared by every region and weight below
solutions = solve_many([scene.with_alpha(a) for a in alphas], 12)

for weight in ("paper", "conventional"):
    for R in (0.5, 1.0):
        fit = energy_scaling_fit(scene, alphas, ProbeRegion((0, 0, 0), R), 0.0, weight, 12, solutions=solutions)
        print(f"{weight:>12s}  R = {R}:  slope {fit.slope:.3f}   C = {fit.constant:.4e}")
