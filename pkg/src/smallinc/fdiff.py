"""Fourth-order central finite differences for vector fields on R^3.

A *field* here is any callable mapping points of shape ``(n, 3)`` to values
of shape ``(n, *S)``. Derivatives are returned with the differentiation axis
appended last.
"""
import numpy as np

_OFFSETS = (-2, -1, 1, 2)
_WEIGHTS = (1.0, -8.0, 8.0, -1.0)


def jacobian(field, x, h):
    """``J[n, ..., a] = d field[n, ...] / d x_a`` at the points ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = len(x)
    shifted = []
    for axis in range(3):
        for o in _OFFSETS:
            y = x.copy()
            y[:, axis] += o * h
            shifted.append(y)
    vals = field(np.concatenate(shifted))
    vals = vals.reshape((3, len(_OFFSETS), n) + vals.shape[1:])
    out = sum(w * vals[:, i] for i, w in enumerate(_WEIGHTS)) / (12.0 * h)
    return np.moveaxis(out, 0, -1)


def curl(field, x, h):
    """Curl of a vector field (acting on the first value axis, column by column)."""
    J = jacobian(field, x, h)
    # J[n, i, ..., a] = d_a F_i
    c0 = J[:, 2, ..., 1] - J[:, 1, ..., 2]
    c1 = J[:, 0, ..., 2] - J[:, 2, ..., 0]
    c2 = J[:, 1, ..., 0] - J[:, 0, ..., 1]
    return np.stack([c0, c1, c2], axis=1)


def divergence(field, x, h):
    J = jacobian(field, x, h)
    return J[:, 0, ..., 0] + J[:, 1, ..., 1] + J[:, 2, ..., 2]


def laplacian(field, x, h):
    """Laplacian via nested first differences."""
    grad = lambda y: jacobian(field, y, h)
    H = jacobian(grad, x, h)
    return H[..., 0, 0] + H[..., 1, 1] + H[..., 2, 2]


def time_derivative(fn, t, h):
    """``d fn / dt`` at scalar ``t`` with the same fourth-order stencil."""
    return sum(w * fn(t + o * h) for o, w in zip(_OFFSETS, _WEIGHTS)) / (12.0 * h)
