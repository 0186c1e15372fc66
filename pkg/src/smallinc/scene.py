"""Physical configuration: background medium, inclusions, scale and source.

A scene describes ``m`` inclusions ``z_j + alpha * B_j`` embedded in a
homogeneous background ``(eps0, mu0)`` and illuminated by a point electric
dipole placed away from them. Time-harmonic quantities use the ``exp(-i w t)``
convention throughout the package.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class WaveContext:
    """Background constants and the derived wavenumber ``k = omega*sqrt(eps0*mu0)``."""

    eps0: float
    mu0: float
    omega: float
    k: float = field(init=False)

    def __post_init__(self):
        for name in ("eps0", "mu0", "omega"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        object.__setattr__(self, "k", self.omega * math.sqrt(self.eps0 * self.mu0))

    @classmethod
    def natural(cls, k=1.0):
        """Preset with ``eps0 = mu0 = 1`` so that ``omega = k``."""
        return cls(1.0, 1.0, float(k))

    @property
    def wavelength(self):
        return 2 * math.pi / self.k


@dataclass(frozen=True)
class Lattice:
    """Voxel centres of a shape in reference (unscaled) coordinates.

    ``index`` holds integer lattice coordinates in ``[0, dims)``; ``centers``
    are the matching cell midpoints and ``cell`` the cubic cell edge.
    """

    centers: np.ndarray
    index: np.ndarray
    cell: float
    dims: tuple

    @property
    def cell_volume(self):
        return self.cell ** 3

    @property
    def volume(self):
        return len(self.centers) * self.cell ** 3

    def __len__(self):
        return len(self.centers)


@dataclass(frozen=True)
class Ball:
    """Ball of the given radius centred at the origin."""

    radius: float

    def contains(self, y):
        y = np.asarray(y, dtype=float)
        return np.linalg.norm(y, axis=-1) <= self.radius

    @property
    def volume(self):
        return 4.0 / 3.0 * math.pi * self.radius ** 3

    @property
    def diameter(self):
        return 2.0 * self.radius

    @property
    def bounding_radius(self):
        return self.radius

    def lattice(self, n):
        """Centrally symmetric voxelization with ``n`` cells across the diameter."""
        n = int(n)
        h = 2.0 * self.radius / n
        ax = (np.arange(n) - (n - 1) / 2.0) * h
        idx = np.stack(np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij"), -1)
        idx = idx.reshape(-1, 3)
        centers = ax[idx]
        keep = np.linalg.norm(centers, axis=1) <= self.radius
        return Lattice(centers[keep], idx[keep], h, (n, n, n))


@dataclass(frozen=True, eq=False)
class VoxelShape:
    """Shape given by a boolean indicator lattice.

    Parameters
    ----------
    mask : array_like of bool, shape (nx, ny, nz)
    cell : float
        Cubic cell edge in reference coordinates.
    origin : array_like, optional
        Lower corner of the lattice. Defaults to centring the box on the origin.
    """

    mask: np.ndarray
    cell: float
    origin: np.ndarray = None

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 3:
            raise ValueError("voxel mask must be three-dimensional")
        object.__setattr__(self, "mask", mask)
        if self.origin is None:
            origin = -0.5 * self.cell * np.array(mask.shape, dtype=float)
        else:
            origin = np.asarray(self.origin, dtype=float)
        object.__setattr__(self, "origin", origin)

    def contains(self, y):
        """Closed-cell membership: points on a face of an occupied cell are inside."""
        y = np.asarray(y, dtype=float)
        single = y.ndim == 1
        y = np.atleast_2d(y)
        f = (y - self.origin) / self.cell
        lo = np.floor(f).astype(int)
        on_face = f == np.floor(f)
        dims = np.array(self.mask.shape)
        inside = np.zeros(len(y), dtype=bool)
        for shift in np.ndindex(2, 2, 2):
            s = np.array(shift)
            # only step back across a face when the point sits exactly on it
            cand = lo - s * on_face
            valid = np.all((cand >= 0) & (cand < dims), axis=1)
            if (s > 0).any():
                valid &= np.all(on_face | (s == 0), axis=1)
            c = cand[valid]
            inside[np.flatnonzero(valid)] |= self.mask[c[:, 0], c[:, 1], c[:, 2]]
        return bool(inside[0]) if single else inside

    @property
    def volume(self):
        return float(self.mask.sum()) * self.cell ** 3

    def _occupied_box(self):
        idx = np.argwhere(self.mask)
        lo = self.origin + idx.min(axis=0) * self.cell
        hi = self.origin + (idx.max(axis=0) + 1) * self.cell
        return lo, hi

    @property
    def diameter(self):
        lo, hi = self._occupied_box()
        return float(np.linalg.norm(hi - lo))

    @property
    def bounding_radius(self):
        idx = np.argwhere(self.mask)
        corners = []
        for shift in np.ndindex(2, 2, 2):
            corners.append(self.origin + (idx + np.array(shift)) * self.cell)
        return float(np.linalg.norm(np.concatenate(corners), axis=1).max())

    def is_connected(self):
        # face connectivity, as for a flood fill over voxels
        _, count = ndimage.label(self.mask)
        return count == 1

    def lattice(self, n):
        """Resample onto cubic cells, ``n`` cells along the longest box edge."""
        lo, hi = self._occupied_box()
        extent = hi - lo
        h = float(extent.max()) / int(n)
        dims = np.maximum(1, np.rint(extent / h).astype(int))
        mid = 0.5 * (lo + hi)
        idx = np.stack(np.meshgrid(*[np.arange(d) for d in dims], indexing="ij"), -1).reshape(-1, 3)
        centers = mid + (idx - (dims - 1) / 2.0) * h
        keep = self.contains(centers)
        return Lattice(centers[keep], idx[keep], h, tuple(int(d) for d in dims))

    @classmethod
    def cube(cls, edge=1.0):
        return cls(np.ones((1, 1, 1), dtype=bool), float(edge))


@dataclass(frozen=True, eq=False)
class InclusionSpec:
    center: np.ndarray
    shape: object
    eps: float
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))

    def contains(self, x, alpha):
        """Membership of ``x`` in ``center + alpha * shape`` (closed set)."""
        x = np.asarray(x, dtype=float)
        if alpha == 0:
            return np.zeros(x.shape[:-1], dtype=bool)
        return self.shape.contains((x - self.center) / alpha)


@dataclass(frozen=True, eq=False)
class DipoleSource:
    """Point electric dipole ``J_s = p delta(x - position)``."""

    position: np.ndarray
    moment: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "moment", np.asarray(self.moment, dtype=complex).reshape(3))


@dataclass(frozen=True, eq=False)
class Scene:
    wave: WaveContext
    alpha: float
    inclusions: tuple
    source: DipoleSource
    c0: float
    source_clearance: float = None

    def __post_init__(self):
        object.__setattr__(self, "inclusions", tuple(self.inclusions))

    @property
    def clearance(self):
        """Resolved source clearance; defaults to ``2 max_j(alpha diam B_j) + c0``."""
        if self.source_clearance is not None:
            return self.source_clearance
        diam = max((inc.shape.diameter for inc in self.inclusions), default=0.0)
        return 2.0 * self.alpha * diam + self.c0

    def with_alpha(self, alpha):
        return dataclasses.replace(self, alpha=float(alpha))

    def background(self):
        """The degenerate ``alpha = 0`` scene."""
        return self.with_alpha(0.0)

    @property
    def centroid(self):
        return np.mean([inc.center for inc in self.inclusions], axis=0)


@dataclass
class Violation:
    rule: str
    indices: tuple
    message: str

    def __str__(self):
        return self.message


@dataclass
class ValidationReport:
    violations: list

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return "; ".join(str(v) for v in self.violations)


def _inclusions_overlap(a, b, alpha):
    dist = np.linalg.norm(a.center - b.center)
    if dist > alpha * (a.shape.bounding_radius + b.shape.bounding_radius):
        return False
    if isinstance(a.shape, Ball) and isinstance(b.shape, Ball):
        return True
    # sample one shape's lattice against the other's membership
    for p, q in ((a, b), (b, a)):
        pts = p.center + alpha * p.shape.lattice(24).centers
        if np.any(q.contains(pts, alpha)):
            return True
    return False


def validate_scene(scene):
    """Check every scene invariant and collect the violations.

    Returns
    -------
    ValidationReport
        ``report.ok`` is True iff no invariant is violated. Violations are
        returned as data; this function does not raise.
    """
    out = []
    incs = scene.inclusions
    if not (scene.alpha >= 0 and np.isfinite(scene.alpha)):
        out.append(Violation("alpha", (), f"alpha must be >= 0, got {scene.alpha}"))
    if not scene.c0 > 0:
        out.append(Violation("c0", (), f"minimum separation c0 must be > 0, got {scene.c0}"))
    if not np.any(scene.source.moment != 0):
        out.append(Violation("source", (), "dipole moment must be nonzero"))
    for j, inc in enumerate(incs):
        if not inc.eps > 0:
            out.append(Violation("eps", (j,), f"inclusion {j}: permittivity must be positive, got {inc.eps}"))
        if not inc.mu > 0:
            out.append(Violation("mu", (j,), f"inclusion {j}: permeability must be positive, got {inc.mu}"))
        shape = inc.shape
        if isinstance(shape, Ball):
            if not shape.radius > 0:
                out.append(Violation("shape", (j,), f"inclusion {j}: ball radius must be > 0"))
        elif isinstance(shape, VoxelShape):
            if not shape.mask.any():
                out.append(Violation("shape", (j,), f"inclusion {j}: voxel grid is empty"))
            else:
                if not shape.is_connected():
                    out.append(Violation("shape", (j,), f"inclusion {j}: voxel grid is not connected"))
                if not shape.contains(np.zeros(3)):
                    out.append(Violation("shape", (j,), f"inclusion {j}: shape does not contain the origin"))
        else:
            out.append(Violation("shape", (j,), f"inclusion {j}: unknown shape {type(shape).__name__}"))
    for j in range(len(incs)):
        for l in range(j + 1, len(incs)):
            d = float(np.linalg.norm(incs[j].center - incs[l].center))
            if d < scene.c0:
                out.append(Violation(
                    "separation", (j, l),
                    f"inclusions {j},{l}: |z_j - z_l| = {d:.6g} < c0 = {scene.c0:.6g}"))
            elif scene.alpha > 0 and _inclusions_overlap(incs[j], incs[l], scene.alpha):
                out.append(Violation("overlap", (j, l), f"inclusions {j},{l}: scaled inclusions intersect"))
    clearance = scene.clearance
    for j, inc in enumerate(incs):
        d = float(np.linalg.norm(scene.source.position - inc.center))
        if d < clearance:
            out.append(Violation(
                "clearance", (j,),
                f"inclusion {j}: source distance {d:.6g} < source_clearance {clearance:.6g}"))
    return ValidationReport(out)


def material_at(scene, x):
    """Piecewise-constant ``(eps, mu)`` at ``x``; accepts a point or an (n, 3) array."""
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    eps = np.full(len(pts), scene.wave.eps0)
    mu = np.full(len(pts), scene.wave.mu0)
    if scene.alpha > 0:
        for inc in scene.inclusions:
            inside = np.atleast_1d(inc.contains(pts, scene.alpha))
            eps[inside] = inc.eps
            mu[inside] = inc.mu
    if x.ndim == 1:
        return float(eps[0]), float(mu[0])
    return eps, mu


def inclusion_index(scene, x):
    """Index of the inclusion containing each point, or -1."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.full(len(pts), -1)
    if scene.alpha > 0:
        for j, inc in enumerate(scene.inclusions):
            out[np.atleast_1d(inc.contains(pts, scene.alpha))] = j
    return out



def probe_points(scene, n=8, seed=0, radius=None, center=None):
    """Deterministic points on a sphere around the inclusion centroid.

    The default radius is ``5 * max_j(alpha * diam B_j)``.
    """
    if radius is None:
        radius = 5.0 * scene.alpha * max(inc.shape.diameter for inc in scene.inclusions)
    center = scene.centroid if center is None else np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return center + radius * d
