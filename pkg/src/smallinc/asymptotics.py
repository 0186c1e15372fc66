"""Leading-order small-inclusion expansions of the perturbed fields.

For inclusions ``z_j + alpha B_j`` with polarization tensors
``M_eps = M(eps_j/eps0; B_j)`` and ``M_mu = M(mu_j/mu0; B_j)``::

    E_a(x) = E0(x) + alpha^3 sum_j [ -i w (mu_j - mu0) curl'G(x, z_j) M_mu H0(z_j)
                                     + w^2 mu0 (eps_j - eps0) G(x, z_j) M_eps E0(z_j) ]
    H_a(x) = H0(x) + alpha^3 sum_j [  i w (eps_j - eps0) curl'G(x, z_j) M_eps E0(z_j)
                                     + s w^2 eps0 (mu_j - mu0) G(x, z_j) M_mu H0(z_j) ]

The remainder is O(alpha^4), and O(alpha^5) for balls.

Sign convention for ``s``
-------------------------
``s = +1`` (``convention="consistent"``, the default) is what
``H = curl E / (i w mu0)`` gives when applied to the electric expansion, and
is the image of the electric term under the duality
``(E, H, eps, mu) -> (H, -E, mu, eps)``. The expansion is also commonly
quoted with ``s = -1``; that form is available as ``convention="printed"``.
"""
from dataclasses import dataclass

import numpy as np

from . import fdiff
from .errors import DomainError
from .green import apply_curl_green, apply_green
from .polarization import inclusion_tensors
from .scene import Ball, inclusion_index
from .sources import background_E, background_H

CONVENTIONS = ("consistent", "printed")


def _sign(convention):
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    return 1.0 if convention == "consistent" else -1.0


def default_tensors(scene, resolution=16):
    """Per-inclusion ``(M_eps, M_mu)``: closed form for balls, numeric otherwise."""
    w = scene.wave
    return [inclusion_tensors(inc, w.eps0, w.mu0, resolution) for inc in scene.inclusions]


def _points(scene, x):
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    if np.any(inclusion_index(scene, pts) >= 0):
        raise DomainError("expansion valid in exterior evaluation region: point lies inside an inclusion")
    if np.any(np.linalg.norm(pts - scene.source.position, axis=-1) == 0):
        raise DomainError("evaluation point coincides with the source")
    return x, pts


def electric_correction(wave, inclusions, tensors, e_at, h_at, pts):
    """Electric ``alpha^3`` coefficient from explicit background values at the centres.

    ``e_at[j]``, ``h_at[j]`` are ``E0(z_j)``, ``H0(z_j)``. Exposed so that dual
    problems can be evaluated with substituted fields.
    """
    out = np.zeros((len(pts), 3), dtype=complex)
    for inc, (M_eps, M_mu), e, h in zip(inclusions, tensors, e_at, h_at):
        if inc.mu != wave.mu0:
            mh = np.asarray(M_mu) @ h
            out += -1j * wave.omega * (inc.mu - wave.mu0) * apply_curl_green(pts, inc.center, wave.k, mh)
        if inc.eps != wave.eps0:
            me = np.asarray(M_eps) @ e
            out += wave.omega ** 2 * wave.mu0 * (inc.eps - wave.eps0) * apply_green(pts, inc.center, wave.k, me)
    return out


def magnetic_correction(wave, inclusions, tensors, e_at, h_at, pts, convention="consistent"):
    """Magnetic counterpart of :func:`electric_correction`."""
    sign = _sign(convention)
    out = np.zeros((len(pts), 3), dtype=complex)
    for inc, (M_eps, M_mu), e, h in zip(inclusions, tensors, e_at, h_at):
        if inc.eps != wave.eps0:
            me = np.asarray(M_eps) @ e
            out += 1j * wave.omega * (inc.eps - wave.eps0) * apply_curl_green(pts, inc.center, wave.k, me)
        if inc.mu != wave.mu0:
            mh = np.asarray(M_mu) @ h
            out += sign * wave.omega ** 2 * wave.eps0 * (inc.mu - wave.mu0) * apply_green(
                pts, inc.center, wave.k, mh)
    return out


def _center_fields(scene):
    e_at = [background_E(scene, inc.center) for inc in scene.inclusions]
    h_at = [background_H(scene, inc.center) for inc in scene.inclusions]
    return e_at, h_at


def correction_E(scene, x, tensors):
    """Coefficient of ``alpha^3`` in the electric expansion."""
    x, pts = _points(scene, x)
    out = electric_correction(scene.wave, scene.inclusions, tensors, *_center_fields(scene), pts)
    return out[0] if x.ndim == 1 else out


def correction_H(scene, x, tensors, convention="consistent"):
    """Coefficient of ``alpha^3`` in the magnetic expansion."""
    x, pts = _points(scene, x)
    out = magnetic_correction(scene.wave, scene.inclusions, tensors, *_center_fields(scene), pts, convention)
    return out[0] if x.ndim == 1 else out


def asymptotic_E(scene, x, tensors=None):
    """``E0(x)`` plus the ``alpha^3`` inclusion correction.

    Parameters
    ----------
    scene : Scene
    x : array_like, shape (3,) or (n, 3)
        Exterior points, away from the source.
    tensors : list of (M_eps, M_mu), optional
        One pair per inclusion; defaults to :func:`default_tensors`.

    Raises
    ------
    DomainError
        If a point lies inside an inclusion or on the source.
    """
    x, pts = _points(scene, x)
    E0 = background_E(scene, x)
    if scene.alpha == 0:
        return E0
    tensors = default_tensors(scene) if tensors is None else tensors
    return E0 + scene.alpha ** 3 * correction_E(scene, x, tensors)


def asymptotic_H(scene, x, tensors=None, convention="consistent"):
    """``H0(x)`` plus the ``alpha^3`` inclusion correction (see module notes on sign)."""
    x, pts = _points(scene, x)
    H0 = background_H(scene, x)
    if scene.alpha == 0:
        return H0
    tensors = default_tensors(scene) if tensors is None else tensors
    return H0 + scene.alpha ** 3 * correction_H(scene, x, tensors, convention)


@dataclass(frozen=True)
class AsymptoticCoefficients:
    c1: complex
    c2: complex
    c1p: complex
    c2p: complex


def _ball(scene, j):
    inc = scene.inclusions[j]
    if not isinstance(inc.shape, Ball):
        raise DomainError(f"inclusion {j} is not a ball")
    return inc


def contrast_factors(scene, j):
    """``(3 |B| (eps_j-eps0)/(eps_j+2 eps0), 3 |B| (mu_j-mu0)/(mu_j+2 mu0))`` for ball ``j``."""
    w = scene.wave
    inc = _ball(scene, j)
    vol = inc.shape.volume
    a_eps = 3.0 * vol * (inc.eps - w.eps0) / (inc.eps + 2.0 * w.eps0)
    a_mu = 3.0 * vol * (inc.mu - w.mu0) / (inc.mu + 2.0 * w.mu0)
    return a_eps, a_mu


def ball_coefficients(scene, j):
    """Constants of the ball expansions for inclusion ``j``.

    ``c1/(i w mu0) = c2p/k^2 = -a_mu`` and ``c2/k^2 = c1p/(i w eps0) = a_eps``.
    """
    w = scene.wave
    a_eps, a_mu = contrast_factors(scene, j)
    return AsymptoticCoefficients(
        c1=-1j * w.omega * w.mu0 * a_mu,
        c2=w.k ** 2 * a_eps,
        c1p=1j * w.omega * w.eps0 * a_eps,
        c2p=-w.k ** 2 * a_mu,
    )


def asymptotic_E_ball(scene, x):
    """Electric expansion written with the ball constants ``c1, c2``."""
    x, pts = _points(scene, x)
    out = background_E(scene, pts)
    a3 = scene.alpha ** 3
    for j, inc in enumerate(scene.inclusions):
        c = ball_coefficients(scene, j)
        hz = background_H(scene, inc.center)
        ez = background_E(scene, inc.center)
        out = out + a3 * (c.c1 * apply_curl_green(pts, inc.center, scene.wave.k, hz)
                          + c.c2 * apply_green(pts, inc.center, scene.wave.k, ez))
    return out[0] if x.ndim == 1 else out


def asymptotic_H_ball(scene, x, convention="consistent"):
    """Magnetic expansion written with the ball constants ``c1p, c2p``.

    ``c2p`` carries the sign of ``convention="printed"``; the consistent convention
    flips it.
    """
    sign = -_sign(convention)
    x, pts = _points(scene, x)
    out = background_H(scene, pts)
    a3 = scene.alpha ** 3
    for j, inc in enumerate(scene.inclusions):
        c = ball_coefficients(scene, j)
        hz = background_H(scene, inc.center)
        ez = background_E(scene, inc.center)
        out = out + a3 * (c.c1p * apply_curl_green(pts, inc.center, scene.wave.k, ez)
                          + sign * c.c2p * apply_green(pts, inc.center, scene.wave.k, hz))
    return out[0] if x.ndim == 1 else out


def energy_rate_perturbation(scene, x, convention="printed", h=None):
    """``alpha^3`` coefficient of ``d/dt (aleph_0 - aleph_alpha)`` away from the source.

    Evaluates, per ball inclusion with ``a_eps``, ``a_mu`` from
    :func:`contrast_factors`, ``e = E0(z_j)`` and ``m = H0(z_j)``::

        a_eps / mu0 * div[ i w eps0 E0 x (curl'G e) + k^2 (G e) x H0 ]
      - a_mu  / mu0 * div[ i w mu0 (curl'G m) x H0 + s k^2 E0 x (G m) ]

    with ``s = +1`` for ``convention="printed"`` and ``-1`` for
    ``"consistent"``. Divergences are fourth-order central differences of the
    analytic products with step ``h`` (default ``1e-3/k``). The source terms
    ``J_s . (...)`` vanish off the dipole's support; see :func:`source_pairing`.
    The result is a complex phasor-product quantity.
    """
    w = scene.wave
    s = -_sign(convention)
    h = 1e-3 / w.k if h is None else h
    x, pts = _points(scene, x)
    if np.any(np.linalg.norm(pts - scene.source.position, axis=-1) < 4 * h):
        raise DomainError("point too close to the source for the difference stencil")
    total = np.zeros(len(pts), dtype=complex)
    for j, inc in enumerate(scene.inclusions):
        a_eps, a_mu = contrast_factors(scene, j)
        z = inc.center
        e = background_E(scene, z)
        m = background_H(scene, z)

        def eps_flux(y):
            return (1j * w.omega * w.eps0 * np.cross(background_E(scene, y), apply_curl_green(y, z, w.k, e))
                    + w.k ** 2 * np.cross(apply_green(y, z, w.k, e), background_H(scene, y)))

        def mu_flux(y):
            return (1j * w.omega * w.mu0 * np.cross(apply_curl_green(y, z, w.k, m), background_H(scene, y))
                    + s * w.k ** 2 * np.cross(background_E(scene, y), apply_green(y, z, w.k, m)))

        if a_eps != 0:
            total += a_eps / w.mu0 * fdiff.divergence(eps_flux, pts, h)
        if a_mu != 0:
            total -= a_mu / w.mu0 * fdiff.divergence(mu_flux, pts, h)
    return total[0] if x.ndim == 1 else total


def source_pairing(scene, convention="printed"):
    """The ``J_s`` terms integrated against the dipole: ``p . (...)`` at ``x_s``.

    ``sum_j [a_eps k^2 p.(G(x_s,z_j) E0(z_j)) - a_mu i w mu0 p.(curl'G(x_s,z_j) H0(z_j))]``.
    """
    _sign(convention)
    w = scene.wave
    p, xs = scene.source.moment, scene.source.position
    total = 0j
    for j, inc in enumerate(scene.inclusions):
        a_eps, a_mu = contrast_factors(scene, j)
        e = background_E(scene, inc.center)
        m = background_H(scene, inc.center)
        total += a_eps * w.k ** 2 * p @ apply_green(xs, inc.center, w.k, e)
        total -= a_mu * 1j * w.omega * w.mu0 * p @ apply_curl_green(xs, inc.center, w.k, m)
    return total
