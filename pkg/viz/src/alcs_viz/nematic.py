"""Pointwise extraction of the scalar order parameter and director angle
from the stored tensor components.

For a traceless symmetric 2x2 tensor with entries (q11, q12) the
eigenvalues are +/- sqrt(q11^2 + q12^2); the order parameter is twice the
positive one and the director is the leading eigenvector, defined up to
sign (a line field, not a vector field).
"""

import numpy as np

__all__ = ["order_parameter", "director_angle", "eigensolve_order"]


def order_parameter(q11, q12):
    return 2.0 * np.hypot(q11, q12)


def director_angle(q11, q12):
    return 0.5 * np.arctan2(q12, q11)


def eigensolve_order(q11, q12):
    """Order parameter through an explicit 2x2 eigensolve (cross-check)."""
    mats = np.empty(q11.shape + (2, 2))
    mats[..., 0, 0] = q11
    mats[..., 0, 1] = q12
    mats[..., 1, 0] = q12
    mats[..., 1, 1] = -q11
    w = np.linalg.eigvalsh(mats)
    return 2.0 * w[..., 1]
