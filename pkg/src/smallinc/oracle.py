"""Full-wave reference solution of the Lippmann-Schwinger equation.

For purely dielectric inclusions the total field satisfies::

    E(x) = E0(x) + w^2 mu0 sum_j (eps_j - eps0) int_{z_j + alpha B_j} G(x, y) E(y) dy

Each scaled inclusion is voxelized on a regular lattice. Off-diagonal cell
interactions use the midpoint rule ``G(x_v, x_v') h^3``; the self cell uses
the integral of ``G`` over the equal-volume sphere, including the ``-I/(3k^2)``
depolarization part. The dense operator is applied matrix-free (lattice
offset table within an inclusion, direct kernel evaluation across
inclusions) and inverted with restarted GMRES.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import _kernels
from .errors import DomainError, SolverError
from .green import apply_green, dyadic_coefficients, grad_scalar_green
from .scene import inclusion_index
from .sources import FieldSample, background_E, background_H

_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


@dataclass(frozen=True, eq=False)
class InclusionGrid:
    """Voxel centres of one scaled inclusion in world coordinates."""

    inclusion: int
    centers: np.ndarray
    index: np.ndarray
    dims: tuple
    cell: float

    @property
    def cell_volume(self):
        return self.cell ** 3

    def __len__(self):
        return len(self.centers)


@dataclass(eq=False)
class OracleSolution:
    grids: list
    interior_E: list
    iterations: int
    final_residual: float
    residual_history: list = field(default_factory=list)
    voxels_per_diameter: int = None
    tol: float = None


def inclusion_grids(scene, voxels_per_diameter):
    grids = []
    for j, inc in enumerate(scene.inclusions):
        lat = inc.shape.lattice(voxels_per_diameter)
        grids.append(InclusionGrid(j, inc.center + scene.alpha * lat.centers, lat.index,
                                   lat.dims, scene.alpha * lat.cell))
    return grids


def self_cell_integral(k, cell):
    """Integral of ``G`` over the sphere with the cell's volume (scalar multiple of I)."""
    a = cell * (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)
    ika = 1j * k * a
    return ((2.0 / 3.0) * ((1.0 - ika) * np.exp(ika) - 1.0) - 1.0 / 3.0) / k ** 2


def lattice_table(k, dims, cell):
    """Cell-integrated kernel ``W`` for every lattice offset, shape ``(F, 6)``."""
    offs = _kernels.offset_grid(dims)
    d = offs * cell
    r = np.linalg.norm(d, axis=1)
    zero = r == 0
    r[zero] = 1.0
    a, b = dyadic_coefficients(r, k)
    u = d / r[:, None]
    vol = cell ** 3
    table = np.empty((len(offs), 6), dtype=complex)
    for n, (i, j) in enumerate(_PAIRS):
        table[:, n] = (b * u[:, i] * u[:, j] + a * (i == j)) * vol
    s = self_cell_integral(k, cell)
    table[zero, :3] = s
    table[zero, 3:] = 0.0
    return np.ascontiguousarray(table)


def _chunked(n_targets, n_sources, budget=2_000_000):
    step = max(1, budget // max(1, n_sources))
    for start in range(0, n_targets, step):
        yield slice(start, min(n_targets, start + step))


def green_sum(targets, sources, k, vectors, weight):
    """``sum_s G(t, s) v_s * weight`` for targets disjoint from sources."""
    out = np.zeros((len(targets), 3), dtype=complex)
    for sl in _chunked(len(targets), len(sources)):
        out[sl] = apply_green(targets[sl, None, :], sources[None, :, :], k, vectors[None]).sum(1)
    return out * weight


def curl_green_sum(targets, sources, k, vectors, weight, skip_coincident=False):
    """``sum_s grad_x g(t, s) x v_s * weight``; optionally drops ``t == s`` pairs."""
    out = np.zeros((len(targets), 3), dtype=complex)
    for sl in _chunked(len(targets), len(sources)):
        d = targets[sl, None, :] - sources[None, :, :]
        if skip_coincident:
            same = np.all(d == 0, axis=-1)
            d = np.where(same[..., None], 1.0, d)
        grad = grad_scalar_green(d, np.zeros(3), k)
        if skip_coincident:
            grad[same] = 0.0
        out[sl] = np.cross(grad, vectors[None]).sum(1)
    return out * weight


class LSOperator:
    """Matrix-free ``I - sum_j s_j W_j`` acting on stacked voxel fields."""

    def __init__(self, scene, grids):
        w = scene.wave
        self.k = w.k
        self.grids = grids
        self.scale = [w.omega ** 2 * w.mu0 * (scene.inclusions[g.inclusion].eps - w.eps0) for g in grids]
        self.sizes = [len(g) for g in grids]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.tables = [lattice_table(self.k, g.dims, g.cell) for g in grids]
        self.n = int(self.offsets[-1])
        self.applications = 0

    def split(self, v):
        v = v.reshape(self.n, 3)
        return [v[self.offsets[i]:self.offsets[i + 1]] for i in range(len(self.grids))]

    def apply_kernel(self, v):
        """``sum_j s_j W_j v`` (the scattering part only)."""
        parts = self.split(np.asarray(v, dtype=complex))
        out = np.zeros((self.n, 3), dtype=complex)
        for i, gi in enumerate(self.grids):
            dst = out[self.offsets[i]:self.offsets[i + 1]]
            for l, gl in enumerate(self.grids):
                s = self.scale[l]
                if s == 0:
                    continue
                src = np.ascontiguousarray(parts[l])
                if i == l:
                    buf = np.empty_like(src)
                    _kernels.toeplitz_apply(gl.index.astype(np.int64), np.array(gl.dims, dtype=np.int64),
                                            self.tables[l], src, buf)
                    dst += s * buf
                else:
                    dst += s * green_sum(gi.centers, gl.centers, self.k, src, gl.cell_volume)
        return out

    def matvec(self, v):
        self.applications += 1
        v = np.asarray(v, dtype=complex).reshape(self.n, 3)
        return (v - self.apply_kernel(v)).ravel()

    def as_linear_operator(self):
        m = 3 * self.n
        return LinearOperator((m, m), matvec=self.matvec, dtype=complex)


def _require_dielectric(scene):
    for j, inc in enumerate(scene.inclusions):
        if inc.mu != scene.wave.mu0:
            raise DomainError(
                f"unsupported configuration: inclusion {j} has magnetic contrast; "
                "the oracle handles dielectric inclusions only")


def solve_interior(scene, voxels_per_diameter=12, tol=1e-8, maxiter=2000, restart=40):
    """Solve the discretized Lippmann-Schwinger equation on the inclusion voxels.

    Parameters
    ----------
    scene : Scene
        Dielectric-only scene (``mu_j == mu0`` for every inclusion).
    voxels_per_diameter : int
        Lattice resolution across each reference shape, at least 8.
    tol : float
        Target relative residual ``|A e - E0| / |E0|``, checked directly on the
        returned solution.
    maxiter : int
        Cap on Krylov iterations over all restart cycles.

    Returns
    -------
    OracleSolution
        ``iterations`` counts operator applications, including the final audit.

    Raises
    ------
    DomainError
        If any inclusion has magnetic contrast.
    SolverError
        If the residual target is not reached within ``maxiter`` iterations.
    """
    if voxels_per_diameter < 8:
        raise ValueError("voxels_per_diameter must be at least 8")
    _require_dielectric(scene)
    grids = inclusion_grids(scene, voxels_per_diameter)
    op = LSOperator(scene, grids)
    b = np.concatenate([background_E(scene, g.centers) for g in grids]).ravel()
    bnorm = np.linalg.norm(b)
    history = []
    x = b.copy()
    used = 0
    while True:
        resid = np.linalg.norm(op.matvec(x) - b) / bnorm
        history.append(float(resid))
        if resid <= tol:
            break
        if used >= maxiter:
            raise SolverError(
                f"oracle solve did not converge: relative residual {resid:.3e} after {used} iterations",
                history)
        inner = []
        x, _ = gmres(op.as_linear_operator(), b, x0=x, rtol=0.5 * tol, atol=0.0,
                     restart=restart, maxiter=max(1, (maxiter - used) // restart),
                     callback=inner.append, callback_type="pr_norm")
        used += max(1, len(inner))
        history.extend(float(r) for r in inner)
    parts = [p.copy() for p in op.split(x)]
    return OracleSolution(grids, parts, op.applications, float(resid), history,
                          voxels_per_diameter, tol)


def forward_residual(scene, sol):
    """Relative residual of the returned solution, recomputed from scratch."""
    op = LSOperator(scene, sol.grids)
    x = np.concatenate(sol.interior_E).ravel()
    b = np.concatenate([background_E(scene, g.centers) for g in sol.grids]).ravel()
    return float(np.linalg.norm(op.matvec(x) - b) / np.linalg.norm(b))


def born_first_order(scene, voxels_per_diameter):
    """``E0 + sum_j s_j W_j E0`` on the oracle lattice (first Born iterate)."""
    grids = inclusion_grids(scene, voxels_per_diameter)
    op = LSOperator(scene, grids)
    e0 = np.concatenate([background_E(scene, g.centers) for g in grids])
    out = e0 + op.apply_kernel(e0)
    return [p.copy() for p in op.split(out)]


def _check_exterior(scene, x):
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(inclusion_index(scene, pts) >= 0):
        raise DomainError("evaluation point lies inside an inclusion")
    return pts


def scattered_field(scene, sol, x):
    """Total ``(E, H)`` at exterior points from the interior oracle solution."""
    x = np.asarray(x, dtype=float)
    pts = _check_exterior(scene, x)
    w = scene.wave
    E = background_E(scene, pts)
    H = background_H(scene, pts)
    for g, e in zip(sol.grids, sol.interior_E):
        s = w.omega ** 2 * w.mu0 * (scene.inclusions[g.inclusion].eps - w.eps0)
        if s == 0:
            continue
        E = E + s * green_sum(pts, g.centers, w.k, e, g.cell_volume)
        H = H + s / (1j * w.omega * w.mu0) * curl_green_sum(pts, g.centers, w.k, e, g.cell_volume)
    if x.ndim == 1:
        return FieldSample(E[0], H[0], x)
    return FieldSample(E, H, x)


def interior_H(scene, sol):
    """Magnetic field at the voxel centres.

    The self cell contributes nothing: the curl kernel is odd about the cell
    centre, so its equal-volume-sphere integral vanishes.
    """
    w = scene.wave
    out = []
    for g in sol.grids:
        H = background_H(scene, g.centers)
        for gl, e in zip(sol.grids, sol.interior_E):
            s = w.omega ** 2 * w.mu0 * (scene.inclusions[gl.inclusion].eps - w.eps0)
            if s == 0:
                continue
            H = H + s / (1j * w.omega * w.mu0) * curl_green_sum(
                g.centers, gl.centers, w.k, e, gl.cell_volume, skip_coincident=True)
        out.append(H)
    return out


def worker_count(default=1):
    try:
        return max(1, int(os.environ.get("SMALLINC_THREADS", default)))
    except ValueError:
        return default


def solve_many(scenes, voxels_per_diameter, tol=1e-8, workers=None):
    """Independent solves over a list of scenes on a bounded thread pool."""
    workers = workers or worker_count()
    if workers == 1:
        return [solve_interior(s, voxels_per_diameter, tol) for s in scenes]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: solve_interior(s, voxels_per_diameter, tol), scenes))


@dataclass(eq=False)
class ConvergenceReport:
    """Per-scale errors at a fixed probe set and their fitted log-log slopes.

    ``leading`` holds ``|E_oracle - E0|``, ``remainder`` holds
    ``|E_oracle - asymptotic_E|`` with tensors of the oracle's own
    voxelization, and ``remainder_closed_form`` the same with the closed-form
    ball tensors. Arrays have shape ``(len(alphas), len(probes))``; slopes are
    fitted to the maximum over probes.
    """

    alphas: np.ndarray
    probes: np.ndarray
    leading: np.ndarray
    remainder: np.ndarray
    remainder_closed_form: np.ndarray
    leading_fit: object
    remainder_fit: object
    remainder_closed_form_fit: object
    solutions: list

    def rows(self):
        for i, a in enumerate(self.alphas):
            yield a, self.leading[i], self.remainder[i], self.remainder_closed_form[i]


def lattice_tensors(scene, voxels_per_diameter):
    """Polarization tensors of exactly the voxel sets the oracle uses."""
    from .polarization import ContrastProblem, ptensor_numeric

    w = scene.wave
    out = []
    for inc in scene.inclusions:
        lat = inc.shape.lattice(voxels_per_diameter)
        pair = []
        for q0, qj in ((w.eps0, inc.eps), (w.mu0, inc.mu)):
            prob = ContrastProblem(inc.shape, q0, qj, max(8, voxels_per_diameter))
            pair.append(ptensor_numeric(prob, lattice=lat).entries)
        out.append(tuple(pair))
    return out


def convergence_study(template, alphas, voxels_per_diameter=12, probes=None, tol=1e-8,
                      workers=None, solutions=None):
    """Compare oracle fields with the expansions over a geometric sweep of scales.

    The probe set is fixed across the sweep; by default it is the standard
    probe sphere of the largest scale.
    """
    from .asymptotics import asymptotic_E, default_tensors
    from .rates import check_geometric, fit_loglog
    from .scene import probe_points

    alphas = np.asarray(alphas, dtype=float)
    check_geometric(alphas)
    _require_dielectric(template)
    if probes is None:
        probes = probe_points(template.with_alpha(alphas.max()))
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    scenes = [template.with_alpha(a) for a in alphas]
    if solutions is None:
        solutions = solve_many(scenes, voxels_per_diameter, tol, workers)
    lat_t = lattice_tensors(template, voxels_per_diameter)
    closed_t = default_tensors(template)
    lead, rem, rem_c = [], [], []
    for sc, sol in zip(scenes, solutions):
        E = scattered_field(sc, sol, probes).E
        E0 = background_E(sc, probes)
        lead.append(np.linalg.norm(E - E0, axis=1))
        rem.append(np.linalg.norm(E - asymptotic_E(sc, probes, lat_t), axis=1))
        rem_c.append(np.linalg.norm(E - asymptotic_E(sc, probes, closed_t), axis=1))
    lead, rem, rem_c = map(np.array, (lead, rem, rem_c))
    return ConvergenceReport(
        alphas, probes, lead, rem, rem_c,
        fit_loglog(alphas, lead.max(axis=1)),
        fit_loglog(alphas, rem.max(axis=1)),
        fit_loglog(alphas, rem_c.max(axis=1)),
        solutions,
    )
