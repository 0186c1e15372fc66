"""Poynting vector, energy densities and the energy perturbation on a probe region.

Phasors ``F`` map to instantaneous fields ``Re(F exp(-i w t))``. The Poynting
vector is normalized as ``E x H / mu0``.

The whole-space energy of a radiating field diverges, so energies are
integrated over a bounded ball (:class:`ProbeRegion`). A region either
excludes an inclusion entirely or is centred on it; in the latter case the
inclusion contributes its voxel samples and the exterior is covered by
geometrically graded spherical shells.
"""
from dataclasses import dataclass

import numpy as np

from . import fdiff
from .asymptotics import _points, asymptotic_E, asymptotic_H, correction_E, correction_H, default_tensors
from .errors import DomainError
from .oracle import _require_dielectric, inclusion_grids, interior_H, scattered_field, solve_many
from .rates import check_geometric, fit_loglog
from .scene import material_at
from .sources import background_E, background_H

WEIGHTS = ("paper", "conventional")


def instantaneous(phasor, t, omega):
    return np.real(np.asarray(phasor) * np.exp(-1j * omega * t))


def poynting(E, H, t, omega, mu0=1.0):
    """Instantaneous ``(Re(E e^{-iwt}) x Re(H e^{-iwt})) / mu0``."""
    return np.cross(instantaneous(E, t, omega), instantaneous(H, t, omega)) / mu0


def energy_density(E, H, eps, mu, t, omega, weight="paper"):
    """``(eps |E(t)|^2 + m |H(t)|^2) / 2`` with ``m = 1/mu`` for ``weight="paper"`` and ``m = mu`` for ``"conventional"``."""
    if weight not in WEIGHTS:
        raise ValueError(f"weight must be one of {WEIGHTS}")
    e = instantaneous(E, t, omega)
    h = instantaneous(H, t, omega)
    m = 1.0 / np.asarray(mu) if weight == "paper" else np.asarray(mu)
    return 0.5 * (eps * np.sum(e ** 2, axis=-1) + m * np.sum(h ** 2, axis=-1))


class BackgroundProvider:
    """Unperturbed fields; valid everywhere except at the source."""

    provenance = "background"

    def __init__(self, scene):
        self.scene = scene

    def fields(self, x):
        return background_E(self.scene, x), background_H(self.scene, x)

    def interior(self, j, centers):
        return self.fields(centers)


class AsymptoticProvider:
    """Expansion fields; exterior points only."""

    provenance = "asymptotic"

    def __init__(self, scene, tensors=None, convention="consistent"):
        self.scene = scene
        self.tensors = default_tensors(scene) if tensors is None else tensors
        self.convention = convention

    def fields(self, x):
        return (asymptotic_E(self.scene, x, self.tensors),
                asymptotic_H(self.scene, x, self.tensors, self.convention))

    def interior(self, j, centers):
        raise DomainError("quadrature node inside an inclusion: asymptotic fields are exterior-only")


class OracleProvider:
    """Oracle fields: exterior by the integral representation, interior from the solve."""

    provenance = "oracle"

    def __init__(self, scene, solution):
        self.scene = scene
        self.solution = solution
        self._H = None

    def fields(self, x):
        f = scattered_field(self.scene, self.solution, x)
        return f.E, f.H

    def interior(self, j, centers):
        grid = self.solution.grids[j]
        if grid.centers.shape != np.shape(centers) or not np.allclose(grid.centers, centers):
            raise DomainError("interior nodes do not match the oracle lattice")
        if self._H is None:
            self._H = interior_H(self.scene, self.solution)
        return self.solution.interior_E[j], self._H[j]


def _instant_field(provider, which, t):
    w = provider.scene.wave

    def f(y):
        return instantaneous(provider.fields(y)[which], t, w.omega)
    return f


def div_poynting(provider, x, t, h=None):
    """``(H(t) . curl E(t) - E(t) . curl H(t)) / mu0`` with finite-difference curls."""
    w = provider.scene.wave
    h = 1e-3 / w.k if h is None else h
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    _check_stencil(provider.scene, pts, h)
    E, H = provider.fields(pts)
    e, hh = instantaneous(E, t, w.omega), instantaneous(H, t, w.omega)
    ce = fdiff.curl(_instant_field(provider, 0, t), pts, h)
    ch = fdiff.curl(_instant_field(provider, 1, t), pts, h)
    out = (np.sum(hh * ce, axis=-1) - np.sum(e * ch, axis=-1)) / w.mu0
    return out[0] if x.ndim == 1 else out


def div_poynting_direct(provider, x, t, h=None):
    """Finite-difference divergence of :func:`poynting` itself."""
    w = provider.scene.wave
    h = 1e-3 / w.k if h is None else h
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    _check_stencil(provider.scene, pts, h)

    def flux(y):
        E, H = provider.fields(y)
        return poynting(E, H, t, w.omega, w.mu0)

    out = fdiff.divergence(flux, pts, h)
    return out[0] if x.ndim == 1 else out


def _check_stencil(scene, pts, h):
    reach = 2.5 * h
    if np.any(np.linalg.norm(pts - scene.source.position, axis=-1) <= reach):
        raise DomainError("difference stencil reaches the source")
    for inc in scene.inclusions:
        if scene.alpha > 0:
            near = np.linalg.norm(pts - inc.center, axis=-1) <= scene.alpha * inc.shape.bounding_radius + reach
            if np.any(near):
                raise DomainError("difference stencil reaches an inclusion")


def poynting_rate_perturbation(scene, x, tensors=None, convention="printed", h=None):
    """``alpha^3`` coefficient of ``div Pi_alpha - div Pi_0`` assembled from the field expansions.

    Uses the phasor identity ``div(E x H) = H . curl E - E . curl H`` with
    finite-difference curls of the expanded fields, linearized in the
    corrections. Off the source this is the ``alpha^3`` coefficient of
    ``d/dt(aleph_0 - aleph_alpha)``; it serves as an independent check of
    :func:`smallinc.asymptotics.energy_rate_perturbation`.
    """
    w = scene.wave
    h = 1e-3 / w.k if h is None else h
    tensors = default_tensors(scene) if tensors is None else tensors
    x, pts = _points(scene, x)
    E0f = lambda y: background_E(scene, y)
    H0f = lambda y: background_H(scene, y)
    Ecf = lambda y: correction_E(scene, y, tensors)
    Hcf = lambda y: correction_H(scene, y, tensors, convention)
    E0, H0, Ec, Hc = E0f(pts), H0f(pts), Ecf(pts), Hcf(pts)
    curl = lambda f: fdiff.curl(f, pts, h)
    dot = lambda a, b: np.sum(a * b, axis=-1)
    out = (dot(Hc, curl(E0f)) + dot(H0, curl(Ecf)) - dot(Ec, curl(H0f)) - dot(E0, curl(Hcf))) / w.mu0
    return out[0] if x.ndim == 1 else out


@dataclass(frozen=True)
class ProbeRegion:
    """Ball of radius ``radius`` around ``center``; ``order`` is the Gauss order per shell."""

    center: tuple
    radius: float
    order: int = 8

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError("region radius must be positive")
        if self.order < 2:
            raise ValueError("quadrature order must be at least 2")


@dataclass(frozen=True, eq=False)
class RegionQuadrature:
    points: np.ndarray
    weights: np.ndarray
    interior: list  # (inclusion index, voxel centres, cell volume)

    @property
    def volume(self):
        return float(self.weights.sum() + sum(len(c) * v for _, c, v in self.interior))


@dataclass(frozen=True)
class EnergyReport:
    value: float
    region: ProbeRegion
    time: float
    provenance: str
    weight: str = "paper"


def sphere_rule(order):
    """Product rule on the unit sphere: Gauss-Legendre in cos(theta), trapezoid in phi."""
    ct, wt = np.polynomial.legendre.leggauss(order)
    nphi = 2 * order
    phi = 2 * np.pi * np.arange(nphi) / nphi
    st = np.sqrt(1 - ct ** 2)
    dirs = np.stack([
        np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)), np.outer(ct, np.ones(nphi))], -1)
    weights = np.outer(wt, np.full(nphi, 2 * np.pi / nphi))
    return dirs.reshape(-1, 3), weights.ravel()


def shell_rule(center, r0, r1, order):
    """Quadrature for the spherical shell ``r0 < |x - center| < r1``."""
    dirs, wang = sphere_rule(order)
    xr, wr = np.polynomial.legendre.leggauss(order)
    r = 0.5 * (r1 - r0) * xr + 0.5 * (r1 + r0)
    wr = 0.5 * (r1 - r0) * wr * r ** 2
    pts = center + r[:, None, None] * dirs[None]
    w = wr[:, None] * wang[None]
    return pts.reshape(-1, 3), w.ravel()


def graded_shells(r_in, r_out, ratio=2.0):
    edges = [r_in]
    while edges[-1] * ratio < r_out * (1 - 1e-12):
        edges.append(edges[-1] * ratio)
    edges.append(r_out)
    return list(zip(edges[:-1], edges[1:]))


def region_quadrature(region, scene, voxels_per_diameter=None):
    """Nodes and weights for a probe region in the given scene geometry.

    Raises
    ------
    DomainError
        If the region contains the source, cuts through an inclusion, or
        contains an inclusion it is not centred on.
    """
    c = np.asarray(region.center)
    R = region.radius
    if np.linalg.norm(scene.source.position - c) <= R:
        raise DomainError("probe region contains the source")
    inner = None
    for j, inc in enumerate(scene.inclusions):
        if scene.alpha == 0:
            continue
        rad = scene.alpha * inc.shape.bounding_radius
        d = np.linalg.norm(inc.center - c)
        if d >= R + rad:
            continue
        if d <= 1e-12 * R and rad < R:
            inner = (j, rad)
            continue
        raise DomainError(f"probe region must exclude inclusion {j} or be centred on it")
    if inner is None:
        pts, w = shell_rule(c, 0.0, R, region.order)
        return RegionQuadrature(pts, w, [])
    if voxels_per_diameter is None:
        raise DomainError("region contains an inclusion: voxels_per_diameter is required")
    j, rad = inner
    pieces = [shell_rule(c, r0, r1, region.order) for r0, r1 in graded_shells(rad, R)]
    pts = np.concatenate([p for p, _ in pieces])
    w = np.concatenate([q for _, q in pieces])
    grid = inclusion_grids(scene, voxels_per_diameter)[j]
    return RegionQuadrature(pts, w, [(j, grid.centers, grid.cell_volume)])


def region_phasors(provider, quad):
    """Field phasors at every quadrature node (exterior nodes first, then voxels)."""
    E, H = provider.fields(quad.points)
    Es, Hs = [E], [H]
    for j, centers, _ in quad.interior:
        e, h = provider.interior(j, centers)
        Es.append(e)
        Hs.append(h)
    return np.concatenate(Es), np.concatenate(Hs)


def _all_nodes(quad):
    pts = [quad.points] + [c for _, c, _ in quad.interior]
    w = [quad.weights] + [np.full(len(c), v) for _, c, v in quad.interior]
    return np.concatenate(pts), np.concatenate(w)


def instantaneous_energy(provider, region, scene, t, weight="paper", voxels_per_diameter=None,
                         quadrature=None, phasors=None):
    """``(1/2) int_region (eps |E(t)|^2 + m |H(t)|^2) dx`` on the probe region.

    Material weights come from :func:`smallinc.scene.material_at` in ``scene``.
    ``quadrature`` may be built from a different scene so that two fields are
    integrated on identical nodes; ``phasors`` reuses precomputed node values.
    """
    quad = quadrature if quadrature is not None else region_quadrature(region, scene, voxels_per_diameter)
    E, H = phasors if phasors is not None else region_phasors(provider, quad)
    pts, w = _all_nodes(quad)
    eps, mu = material_at(scene, pts)
    dens = energy_density(E, H, eps, mu, t, scene.wave.omega, weight)
    value = float(np.dot(w, dens))
    return EnergyReport(value, region, float(t), provider.provenance, weight)


@dataclass(frozen=True, eq=False)
class EnergyFit:
    alphas: np.ndarray
    energy: np.ndarray
    background: np.ndarray
    differences: np.ndarray
    slope: float
    intercept: float
    residual: float
    constant: float
    degenerate: bool
    weight: str

    def rows(self):
        return zip(self.alphas, self.energy, self.background, self.differences)


def energy_scaling_fit(template, alphas, region, t, weight="paper", voxels_per_diameter=12,
                       solutions=None, tol=1e-8, workers=None):
    """Fit ``|E_alpha(t) - E_0(t)|`` against ``alpha`` on a log-log scale.

    Both energies are integrated on the quadrature of the ``alpha`` scene so
    that quadrature error cancels in the difference. ``constant`` is
    ``max_alpha |dE| / alpha^3``, the smallest ``C`` for which the cubic bound
    holds on the tested range. The fit is declared degenerate when every
    difference is below ``1e-10`` of the background energy.
    """
    alphas = np.asarray(alphas, dtype=float)
    check_geometric(alphas)
    _require_dielectric(template)
    scenes = [template.with_alpha(a) for a in alphas]
    if solutions is None:
        solutions = solve_many(scenes, voxels_per_diameter, tol, workers)
    ea, e0 = [], []
    for sc, sol in zip(scenes, solutions):
        quad = region_quadrature(region, sc, voxels_per_diameter)
        ea.append(instantaneous_energy(OracleProvider(sc, sol), region, sc, t, weight, quadrature=quad).value)
        bg = sc.background()
        e0.append(instantaneous_energy(BackgroundProvider(bg), region, bg, t, weight, quadrature=quad).value)
    ea, e0 = np.array(ea), np.array(e0)
    diff = np.abs(ea - e0)
    degenerate = bool(np.all(diff <= 1e-10 * np.abs(e0)))
    if degenerate:
        slope = intercept = resid = float("nan")
    else:
        fit = fit_loglog(alphas, diff)
        slope, intercept, resid = fit.slope, fit.intercept, fit.residual
    constant = float(np.max(diff / alphas ** 3))
    return EnergyFit(alphas, ea, e0, diff, slope, intercept, resid, constant, degenerate, weight)
