"""
The free-space dyadic kernel
============================

Evaluate G and its primed curl, then check them the only way that really
counts: by differencing and plugging into the defining equation.
"""

import numpy as np

from smallinc import fdiff
from smallinc.green import curl_dyadic_green, dyadic_green

k = 2.0
x = np.array([1.0, 0.4, -0.3])
y = np.array([-0.2, 0.1, 0.5])

G = dyadic_green(x, y, k)
print("G(x, y) =")
print(np.round(G, 5))

# G is complex symmetric, and swapping the points transposes it
print("reciprocity defect:", np.abs(G - dyadic_green(y, x, k).T).max())

# curl curl G - k^2 G should vanish away from the diagonal
h = 1e-3 / k
cc = fdiff.curl(lambda p: fdiff.curl(lambda q: dyadic_green(q, y, k), p, h), x[None], h)[0]
print("relative PDE residual:", np.linalg.norm(cc - k ** 2 * G) / np.linalg.norm(k ** 2 * G))

# the primed curl is a cross-product matrix, hence antisymmetric
C = curl_dyadic_green(x, y, k)
print("curl' G antisymmetric:", np.allclose(C, -C.T))

# far along a ray the outgoing condition kicks in: |x| * defect shrinks like 1/|x|
xhat = x / np.linalg.norm(x)
v = np.array([0.0, 1.0, 0.0])
for R in (1e2, 1e3, 1e4):
    p = R / k * xhat
    curlGv = -curl_dyadic_green(p, y, k) @ v
    print(f"|x| = {R / k:8.0f}   defect = {R / k * np.linalg.norm(curlGv - 1j * k * np.cross(xhat, dyadic_green(p, y, k) @ v)):.3e}")
