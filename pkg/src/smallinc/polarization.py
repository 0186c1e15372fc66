"""Polarization tensors ``M(q_j/q_0; B)``.

For a ball the tensor is ``3 q0 / (qj + 2 q0) |B| I``. For a voxelized shape
the static transmission problem is recast as a volume integral equation for
the interior gradient ``e = grad v``::

    e(x) - chi * PV int_B K(x - y) e(y) dy + chi/3 e(x) = e_i,
    K(d) = (3 d_hat d_hat - I) / (4 pi |d|^3),   chi = qj/q0 - 1,

discretized with the midpoint rule off the diagonal and the equal-volume
sphere depolarization ``-I/3`` on it. The lattice is regular, so the
operator is a discrete convolution and is applied with FFTs.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import DomainError, SolverError
from .scene import Ball


@dataclass(frozen=True, eq=False)
class PolarizationTensor:
    entries: np.ndarray
    contrast: float
    shape_volume: float
    diagnostics: dict = field(default_factory=dict)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True)
class ContrastProblem:
    shape: object
    q0: float
    qj: float
    resolution: int = 32

    def __post_init__(self):
        if self.resolution < 8:
            raise ValueError("resolution must be at least 8 cells per axis")
        if not (self.q0 > 0 and self.qj > 0):
            raise DomainError("q0 and qj must be positive")


def ptensor_ball(q0, qj, volume):
    """Closed-form tensor ``3 q0 / (qj + 2 q0) * volume * I`` for a ball."""
    if not (q0 > 0 and qj > 0 and volume > 0):
        raise DomainError("ptensor_ball needs q0 > 0, qj > 0 and volume > 0")
    return PolarizationTensor(3.0 * q0 / (qj + 2.0 * q0) * volume * np.eye(3), qj / q0, volume)


def static_kernel_table(dims):
    """Lattice-unit kernel on the wrap-around offset grid of size ``2*dims``.

    Returns the six independent components ``(xx, yy, zz, xy, xz, yz)``.
    """
    shape = tuple(2 * d for d in dims)
    axes = [np.fft.fftfreq(s, 1.0 / s) for s in shape]
    D = np.stack(np.meshgrid(*axes, indexing="ij"), -1)
    r = np.linalg.norm(D, axis=-1)
    r[0, 0, 0] = 1.0
    u = D / r[..., None]
    c = 1.0 / (4 * np.pi * r ** 3)
    pairs = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))
    table = np.empty((6,) + shape)
    for n, (i, j) in enumerate(pairs):
        table[n] = c * (3 * u[..., i] * u[..., j] - (i == j))
    # equal-volume sphere self term
    table[:3, 0, 0, 0] = -1.0 / 3.0
    table[3:, 0, 0, 0] = 0.0
    return table


class StaticOperator:
    """``I - chi K`` restricted to the occupied voxels of a lattice."""

    def __init__(self, lattice, chi):
        self.lattice = lattice
        self.chi = chi
        self.dims = lattice.dims
        self.pad = tuple(2 * d for d in self.dims)
        table = static_kernel_table(self.dims)
        self.khat = scipy.fft.rfftn(table, axes=(1, 2, 3))
        self.idx = tuple(lattice.index.T)
        self.n = len(lattice)

    def convolve(self, e):
        """``K e`` for a field ``e`` of shape (n, 3)."""
        grid = np.zeros((3,) + self.pad)
        for c in range(3):
            grid[c][self.idx] = e[:, c]
        eh = scipy.fft.rfftn(grid, axes=(1, 2, 3))
        kx = self.khat
        out = np.empty_like(eh)
        out[0] = kx[0] * eh[0] + kx[3] * eh[1] + kx[4] * eh[2]
        out[1] = kx[3] * eh[0] + kx[1] * eh[1] + kx[5] * eh[2]
        out[2] = kx[4] * eh[0] + kx[5] * eh[1] + kx[2] * eh[2]
        back = scipy.fft.irfftn(out, s=self.pad, axes=(1, 2, 3))
        return np.stack([back[c][self.idx] for c in range(3)], axis=1)

    def matvec(self, v):
        e = v.reshape(self.n, 3)
        return (e - self.chi * self.convolve(e)).ravel()

    def as_linear_operator(self):
        m = 3 * self.n
        return LinearOperator((m, m), matvec=self.matvec, dtype=float)


def solve_static(lattice, chi, rhs, tol=1e-8, maxiter=500):
    """Solve ``(I - chi K) e = rhs`` by GMRES; returns ``(e, residual, history)``."""
    op = StaticOperator(lattice, chi)
    b = np.asarray(rhs, dtype=float).ravel()
    history = []
    if chi == 0:
        return b.reshape(-1, 3), 0.0, history
    x, info = gmres(op.as_linear_operator(), b, x0=b.copy(), rtol=tol, atol=0.0,
                    restart=min(50, maxiter), maxiter=maxiter,
                    callback=history.append, callback_type="pr_norm")
    resid = np.linalg.norm(op.matvec(x) - b) / np.linalg.norm(b)
    if info != 0 or resid > 10 * tol:
        raise SolverError(f"static solve did not converge (relative residual {resid:.3e})", history)
    return x.reshape(-1, 3), resid, history


def ptensor_numeric(problem, tol=1e-8, maxiter=500, lattice=None):
    """Polarization tensor of a voxelized shape by a static volume integral equation.

    Parameters
    ----------
    problem : ContrastProblem
    tol : float
        Relative residual target for each of the three direction solves.
    lattice : Lattice, optional
        Use this voxelization instead of ``problem.shape.lattice(resolution)``.

    Returns
    -------
    PolarizationTensor
        Column ``i`` is the voxel sum of the interior gradient for the applied
        field ``e_i``. ``diagnostics`` carries the achieved residuals.
    """
    lat = lattice if lattice is not None else problem.shape.lattice(problem.resolution)
    chi = problem.qj / problem.q0 - 1.0
    M = np.empty((3, 3))
    residuals, histories = [], []
    for i in range(3):
        rhs = np.zeros((len(lat), 3))
        rhs[:, i] = 1.0
        e, res, hist = solve_static(lat, chi, rhs, tol=tol, maxiter=maxiter)
        M[:, i] = e.sum(axis=0) * lat.cell_volume
        residuals.append(res)
        histories.append(hist)
    diag = {"residuals": residuals, "iterations": [len(h) for h in histories],
            "voxels": len(lat), "cell": lat.cell}
    return PolarizationTensor(M, problem.qj / problem.q0, lat.volume, diag)


def inclusion_tensors(inc, eps0, mu0, resolution=16, lattice=None):
    """``(M_eps, M_mu)`` entries for one inclusion.

    Balls use the closed form unless an explicit ``lattice`` is given, in which
    case the tensor of that voxelization is computed numerically.
    """
    if isinstance(inc.shape, Ball) and lattice is None:
        vol = inc.shape.volume
        return (ptensor_ball(eps0, inc.eps, vol).entries, ptensor_ball(mu0, inc.mu, vol).entries)
    out = []
    for q0, qj in ((eps0, inc.eps), (mu0, inc.mu)):
        prob = ContrastProblem(inc.shape, q0, qj, resolution)
        out.append(ptensor_numeric(prob, lattice=lattice).entries)
    return tuple(out)
