"""Background fields radiated by the dipole source in the homogeneous medium."""
from dataclasses import dataclass

import numpy as np

from .green import apply_green, grad_scalar_green


@dataclass(frozen=True, eq=False)
class FieldSample:
    """Electric and magnetic phasors at one or more points."""

    E: np.ndarray
    H: np.ndarray
    at: np.ndarray


def background_E(scene, x):
    """``E0(x) = i w mu0 G(x, x_s) p``."""
    w = scene.wave
    src = scene.source
    return 1j * w.omega * w.mu0 * apply_green(x, src.position, w.k, src.moment)


def background_H(scene, x):
    """``H0 = curl E0 / (i w mu0) = grad_x g x p`` (the gradient part of G is curl free)."""
    src = scene.source
    return np.cross(grad_scalar_green(x, src.position, scene.wave.k), src.moment)


def background_fields(scene, x):
    """Unperturbed ``(E0, H0)`` at ``x`` (a point or an (n, 3) array)."""
    x = np.asarray(x, dtype=float)
    return FieldSample(background_E(scene, x), background_H(scene, x), x)
