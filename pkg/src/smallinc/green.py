"""Free-space Helmholtz and dyadic Green's kernels.

All functions broadcast over leading axes: points have shape ``(..., 3)``,
scalars come back with shape ``(...)`` and dyadics with ``(..., 3, 3)``.
The outgoing kernel is ``exp(+ikr) / (4 pi r)``, matching the ``exp(-i w t)``
time convention.
"""
import numpy as np

from .errors import KernelSingularityError

# evaluations with max(k, 1) * r below this are refused; the floor on k keeps
# the guard meaningful in the static limit
SINGULAR_KR = 1e-8


def _separation(x, xp, k):
    d = np.asarray(x, dtype=float) - np.asarray(xp, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    scale = max(k, 1.0)
    if np.any(r * scale < SINGULAR_KR):
        raise KernelSingularityError("kernel singularity: coincident source and observation points")
    return d, r


def scalar_green(x, xp, k):
    """Helmholtz kernel ``g = exp(ik|x-x'|) / (4 pi |x-x'|)``."""
    _, r = _separation(x, xp, k)
    return np.exp(1j * k * r) / (4 * np.pi * r)


def grad_scalar_green(x, xp, k):
    """Gradient of ``g`` with respect to ``x``: ``g (ik - 1/r) r_hat``."""
    d, r = _separation(x, xp, k)
    g = np.exp(1j * k * r) / (4 * np.pi * r)
    return (g * (1j * k - 1.0 / r) / r)[..., None] * d


def dyadic_coefficients(r, k):
    """Radial coefficients ``(a, b)`` with ``G = a I + b r_hat r_hat``.

    From ``G = (I + grad grad / k^2) g``::

        a = g (1 + i/(kr) - 1/(kr)^2)
        b = g (-1 - 3i/(kr) + 3/(kr)^2)
    """
    kr = k * r
    g = np.exp(1j * kr) / (4 * np.pi * r)
    inv = 1.0 / kr
    a = g * (1 + 1j * inv - inv ** 2)
    b = g * (-1 - 3j * inv + 3 * inv ** 2)
    return a, b


def dyadic_green(x, xp, k):
    """Dyadic Green's function solving ``curl curl G - k^2 G = I delta``."""
    if not k > 0:
        raise ValueError("dyadic_green requires k > 0")
    d, r = _separation(x, xp, k)
    a, b = dyadic_coefficients(r, k)
    rhat = d / r[..., None]
    out = b[..., None, None] * rhat[..., :, None] * rhat[..., None, :]
    out = out + a[..., None, None] * np.eye(3)
    return out


def cross_matrix(a):
    """Matrix ``[a]_x`` with ``[a]_x v = a x v``."""
    a = np.asarray(a)
    out = np.zeros(a.shape[:-1] + (3, 3), dtype=a.dtype)
    out[..., 0, 1] = -a[..., 2]
    out[..., 0, 2] = a[..., 1]
    out[..., 1, 0] = a[..., 2]
    out[..., 1, 2] = -a[..., 0]
    out[..., 2, 0] = -a[..., 1]
    out[..., 2, 1] = a[..., 0]
    return out


def curl_dyadic_green(x, xp, k):
    """Column-wise curl of ``G(x, x')`` taken in the second argument ``x'``.

    Only the ``g I`` part of ``G`` has a curl, so the result is the cross
    product matrix of ``grad' g = -grad_x g``. Applying it to a vector ``v``
    gives ``grad' g x v``.
    """
    return cross_matrix(-grad_scalar_green(x, xp, k))


def apply_green(x, xp, k, v):
    """``G(x, x') v`` without forming the dyadic; ``v`` broadcasts like the points."""
    d, r = _separation(x, xp, k)
    a, b = dyadic_coefficients(r, k)
    v = np.asarray(v)
    rhat = d / r[..., None]
    proj = np.sum(rhat * v, axis=-1)
    return a[..., None] * v + (b * proj)[..., None] * rhat


def apply_curl_green(x, xp, k, v):
    """``(curl' G)(x, x') v = grad' g x v``."""
    return np.cross(-grad_scalar_green(x, xp, k), np.asarray(v))
