"""Periodic grid, Fourier calculus, and the three spectral operators of
the solver: the Leray projector, the annulus truncation, and the Gaussian
mollifier.

The domain is the periodic box [0, L)^2 sampled on an N x N grid; the
integer wavenumber lattice carries physical wavenumbers xi = 2 pi k / L.
Everything here is a Fourier multiplier, so all operators commute and are
pure given an immutable grid.  Inner products use the trapezoidal rule on
the uniform grid, which is spectrally accurate for periodic fields.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid2D",
    "QTensorField",
    "VelocityField",
    "fwd",
    "inv",
    "gradient",
    "laplacian",
    "divergence",
    "leray_project",
    "leray_project_spec",
    "truncate_band",
    "truncate_band_spec",
    "mollify",
    "mollify_spec",
    "dealias_spec",
    "dealias",
    "integrate",
    "l2_inner",
    "l2_norm2",
    "lp_norm",
    "max_valid_trunc",
]


@dataclass
class Grid2D:
    """Uniform periodic grid: n points per side, box length `length`."""

    n: int
    length: float

    def __post_init__(self):
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError("grid size must be even and >= 8")
        if self.length <= 0:
            raise ValueError("box length must be > 0")
        n, L = self.n, self.length
        h = L / n
        self.x = np.arange(n) * h
        kint = np.fft.fftfreq(n, d=1.0 / n)  # 0, 1, ..., -n/2, ..., -1
        scale = 2.0 * np.pi / L
        self.kx = scale * kint[:, None] * np.ones((1, n))
        self.ky = scale * np.ones((n, 1)) * kint[None, :]
        self.k2 = self.kx**2 + self.ky**2
        self.kmag = np.sqrt(self.k2)
        # first-derivative multipliers; the Nyquist line is zeroed so the
        # derivative of a real field stays real and odd symmetry is exact
        dx = self.kx.copy()
        dy = self.ky.copy()
        dx[kint.astype(int) == -n // 2, :] = 0.0
        dy[:, kint.astype(int) == -n // 2] = 0.0
        self.ikx = 1j * dx
        self.iky = 1j * dy
        # the projector shares the derivative wavenumbers so that the
        # measured divergence of a projected field vanishes identically
        self.kdx = dx
        self.kdy = dy
        kd2 = dx * dx + dy * dy
        with np.errstate(divide="ignore", invalid="ignore"):
            self.inv_kd2 = np.where(kd2 > 0, 1.0 / kd2, 0.0)
        # 2/3-rule mask on the integer lattice
        cut = n // 3
        keep = np.abs(kint) <= cut
        self.dealias_mask = keep[:, None] & keep[None, :]
        self.cell_area = h * h

    @property
    def xy(self):
        return np.meshgrid(self.x, self.x, indexing="ij")


@dataclass
class QTensorField:
    """Traceless symmetric tensor field on a grid (components q11, q12)."""

    grid: Grid2D
    q11: np.ndarray
    q12: np.ndarray

    def copy(self):
        return QTensorField(self.grid, self.q11.copy(), self.q12.copy())


@dataclass
class VelocityField:
    grid: Grid2D
    ux: np.ndarray
    uy: np.ndarray

    def copy(self):
        return VelocityField(self.grid, self.ux.copy(), self.uy.copy())


def fwd(f):
    return np.fft.fft2(f)


def inv(fh):
    return np.fft.ifft2(fh).real


def gradient(grid, f):
    fh = fwd(f)
    return inv(grid.ikx * fh), inv(grid.iky * fh)


def laplacian(grid, f):
    return inv(-grid.k2 * fwd(f))


def divergence(grid, vx, vy):
    return inv(grid.ikx * fwd(vx) + grid.iky * fwd(vy))


def leray_project_spec(grid, vxh, vyh):
    """Mode-wise (I - xi xi^T / |xi|^2); the k = 0 mode passes through."""
    kx, ky = grid.kdx, grid.kdy
    dot = (kx * vxh + ky * vyh) * grid.inv_kd2
    return vxh - kx * dot, vyh - ky * dot


def leray_project(v):
    g = v.grid
    pxh, pyh = leray_project_spec(g, fwd(v.ux), fwd(v.uy))
    return VelocityField(g, inv(pxh), inv(pyh))


def truncate_band_spec(grid, fh, n):
    """Zero modes with |xi| outside [2^-n, 2^n]; the mean always drops."""
    if n < 1:
        raise ValueError("truncation index must be >= 1")
    keep = (grid.kmag >= 2.0 ** (-n)) & (grid.kmag <= 2.0**n)
    return np.where(keep, fh, 0.0)


def truncate_band(grid, f, n):
    return inv(truncate_band_spec(grid, fwd(f), n))


def mollify_spec(grid, fh, eps):
    """Gaussian approximate identity: multiplier exp(-(eps |xi|)^2 / 2)."""
    if eps < 0:
        raise ValueError("mollifier scale must be >= 0")
    if eps == 0.0:
        return fh
    return fh * np.exp(-0.5 * (eps * grid.kmag) ** 2)


def mollify(grid, f, eps):
    if eps == 0.0:
        return f
    return inv(mollify_spec(grid, fwd(f), eps))


def dealias_spec(grid, fh):
    return np.where(grid.dealias_mask, fh, 0.0)


def dealias(grid, f):
    return inv(dealias_spec(grid, fwd(f)))


def integrate(grid, f):
    """Trapezoidal quadrature of a periodic grid function."""
    return grid.cell_area * float(np.sum(f))


def l2_inner(grid, f, g):
    return grid.cell_area * float(np.sum(f * g))


def l2_norm2(grid, f):
    return grid.cell_area * float(np.sum(f * f))


def lp_norm(grid, f, p):
    if p == np.inf:
        return float(np.abs(f).max())
    return (grid.cell_area * float(np.sum(np.abs(f) ** p))) ** (1.0 / p)


def max_valid_trunc(grid):
    """Largest truncation index whose band sits inside the dealiased
    region, so the annulus cutoff is meaningful on this grid."""
    xi_cut = (2.0 * np.pi / grid.length) * (grid.n // 3)
    return int(np.floor(np.log2(xi_cut)))
