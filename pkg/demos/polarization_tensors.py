"""
Polarization tensors of small shapes
====================================

For a ball the tensor is a multiple of the identity. For anything else we
solve a static volume integral equation on a voxel lattice.
"""

import numpy as np

from smallinc.polarization import ContrastProblem, ptensor_ball, ptensor_numeric
from smallinc.scene import Ball, VoxelShape

ball = Ball(1.0)
exact = ptensor_ball(1.0, 2.0, ball.volume).entries[0, 0]
print(f"ball, contrast 2, closed form: {exact:.6f}  (= pi)")

# the numeric solver converges to it as the lattice is refined
for n in (8, 16, 24, 32):
    M = ptensor_numeric(ContrastProblem(ball, 1.0, 2.0, n))
    err = np.linalg.norm(M.entries - exact * np.eye(3)) / np.linalg.norm(exact * np.eye(3))
    print(f"  resolution {n:2d}: relative error {err:.2%}")

# a cube is voxel-exact; cubic symmetry forces a multiple of the identity
for n in (16, 24, 32):
    M = ptensor_numeric(ContrastProblem(VoxelShape.cube(1.0), 1.0, 2.0, n)).entries
    print(f"cube resolution {n}: diag {np.diag(M).round(6)}, max off-diagonal {np.abs(M - np.diag(np.diag(M))).max():.1e}")

# elongated shapes depolarize less along their long axis
rod = VoxelShape(np.ones((24, 8, 8), bool), 1 / 8)
M = ptensor_numeric(ContrastProblem(rod, 1.0, 4.0, 24)).entries
print("3:1:1 rod, contrast 4, eigenvalues / volume:", np.round(np.linalg.eigvalsh(M) / rod.volume, 4))
