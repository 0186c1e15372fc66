"""
Leading-order expansion against the volume-integral oracle
==========================================================

Shrink a dielectric ball and watch the field perturbation fall like
alpha^3 while the error of the expansion falls much faster.
"""

import math

from smallinc.oracle import convergence_study
from smallinc.scene import Ball, DipoleSource, InclusionSpec, Scene, WaveContext

wave = WaveContext(1.0, 2.0, 0.1 / math.sqrt(2.0))
ball = InclusionSpec([0.0, 0.0, 0.0], Ball(0.5), 2.0, 2.0)
scene = Scene(wave, 0.2, [ball], DipoleSource([0.0, 0.0, 30.0], [1.0, 0.0, 0.3]), 0.5)

alphas = [0.2, 0.1, 0.05]
report = convergence_study(scene, alphas, voxels_per_diameter=12)

print(" alpha    |E - E0|      |E - E_asym|   (max over 8 probes)")
for a, lead, rem, _ in report.rows():
    print(f"{a:6.3f}  {lead.max():12.4e}  {rem.max():12.4e}")
print(f"slope of the perturbation:       {report.leading_fit.slope:.3f}")
print(f"slope of the expansion error:    {report.remainder_fit.slope:.3f}")

# The expansion above uses tensors of the very lattice the oracle solved on.
# With the exact ball tensor the fixed-resolution voxel bias, itself of size
# alpha^3, dominates the comparison:
print(f"slope with the closed-form tensor: {report.remainder_closed_form_fit.slope:.3f}")
