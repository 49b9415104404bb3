"""Deterministic field generators used for initial conditions and for
randomized verification sweeps.  Every generator draws from a dedicated
rng seeded by the caller, in a fixed order, so identical seeds give
bit-identical fields.
"""

import numpy as np

from .spectral import (
    QTensorField,
    VelocityField,
    dealias_spec,
    fwd,
    inv,
    leray_project_spec,
)

__all__ = [
    "spectral_ring_noise",
    "random_scalar",
    "random_solenoidal",
    "random_qfield",
    "taylor_green",
    "uniform_director",
]


def spectral_ring_noise(grid, rng, peak, width=None):
    """White noise filtered onto a Gaussian ring |xi| ~ peak, unit RMS.

    The default ring is narrow (a quarter of the peak radius) so the
    field's scale content is controlled by `peak` alone.
    """
    if width is None:
        width = max(0.6, 0.25 * peak)
    raw = rng.standard_normal((grid.n, grid.n))
    envelope = np.exp(-0.5 * ((grid.kmag - peak) / width) ** 2)
    envelope[0, 0] = 0.0
    fh = dealias_spec(grid, envelope * fwd(raw))
    f = inv(fh)
    rms = np.sqrt(np.mean(f * f))
    return f / rms if rms > 0 else f


def random_scalar(grid, seed, peak=2.0, amplitude=1.0):
    rng = np.random.default_rng(seed)
    return amplitude * spectral_ring_noise(grid, rng, peak)


def random_solenoidal(grid, rng, peak=2.0, amplitude=1.0):
    """Divergence-free velocity from a random streamfunction, RMS speed
    equal to `amplitude`."""
    psi = spectral_ring_noise(grid, rng, peak)
    psih = fwd(psi)
    ux = inv(grid.iky * psih)
    uy = -inv(grid.ikx * psih)
    uxh, uyh = leray_project_spec(grid, fwd(ux), fwd(uy))
    ux, uy = inv(uxh), inv(uyh)
    rms = np.sqrt(np.mean(ux * ux + uy * uy))
    if rms > 0:
        ux *= amplitude / rms
        uy *= amplitude / rms
    return VelocityField(grid, ux, uy)


def random_qfield(grid, rng, peak=2.0, amplitude=1.0):
    """Band-limited traceless symmetric tensor field, RMS |Q| = amplitude."""
    q1 = spectral_ring_noise(grid, rng, peak)
    q2 = spectral_ring_noise(grid, rng, peak)
    rms = np.sqrt(np.mean(2.0 * (q1 * q1 + q2 * q2)))
    if rms > 0:
        q1 *= amplitude / rms
        q2 *= amplitude / rms
    return QTensorField(grid, q1, q2)


def taylor_green(grid, amplitude=1.0):
    X, Y = grid.xy
    two_pi_over_l = 2.0 * np.pi / grid.length
    ux = amplitude * np.sin(two_pi_over_l * X) * np.cos(two_pi_over_l * Y)
    uy = -amplitude * np.cos(two_pi_over_l * X) * np.sin(two_pi_over_l * Y)
    return VelocityField(grid, ux, uy)


def uniform_director(grid, s_order=0.5, angle=0.0, noise_amp=0.0, rng=None,
                     noise_peak=4.0):
    """Q = s (n x n - I/2) for the director at the given angle, with an
    optional seeded band-limited perturbation."""
    q11 = np.full((grid.n, grid.n), 0.5 * s_order * np.cos(2.0 * angle))
    q12 = np.full((grid.n, grid.n), 0.5 * s_order * np.sin(2.0 * angle))
    if noise_amp > 0.0:
        if rng is None:
            raise ValueError("noise requires an rng")
        q11 = q11 + noise_amp * spectral_ring_noise(grid, rng, noise_peak)
        q12 = q12 + noise_amp * spectral_ring_noise(grid, rng, noise_peak)
    return QTensorField(grid, q11, q12)
