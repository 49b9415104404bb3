"""Randomized integral-identity checks behind the `check` command.

Each function draws band-limited random fields and measures a cancellation
that the solver's energy bookkeeping relies on.  They return the worst
normalized residual over the ensemble; the caller compares against the
documented tolerance.  `flip_stress_sign` is a test hook that injects a
sign error into the commutator stress so the suite can prove it would
catch one.
"""

import numpy as np

from .fields import random_qfield, random_solenoidal
from .spectral import fwd, integrate, inv

__all__ = [
    "rotation_stress_ensemble",
    "lambda_pair_residual",
    "advection_pair_residual",
    "transport_neutrality_residual",
    "corotation_neutrality_residual",
]


def _gradients(grid, f):
    fh = fwd(f)
    return inv(grid.ikx * fh), inv(grid.iky * fh)


def _laplacian(grid, f):
    return inv(-grid.k2 * fwd(f))


def rotation_stress_ensemble(grid, trials=100, seed=0, peak=4.0,
                      flip_stress_sign=False):
    """Worst residual of the rotation/commutator-stress cancellation

        (W Q' - Q' W, lap Q) - (div(Q' lap Q - lap Q Q'), u) = 0

    over random band-limited tensor pairs and solenoidal velocities,
    normalized by the larger term.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    sign = -1.0 if flip_stress_sign else 1.0
    for _ in range(trials):
        q = random_qfield(grid, rng, peak=peak)
        qp = random_qfield(grid, rng, peak=peak)
        u = random_solenoidal(grid, rng, peak=peak)
        ux_x, ux_y = _gradients(grid, u.ux)
        uy_x, uy_y = _gradients(grid, u.uy)
        omega = 0.5 * (ux_y - uy_x)
        lap1 = _laplacian(grid, q.q11)
        lap2 = _laplacian(grid, q.q12)
        # W Q' - Q' W has components (2 w q'_2, -2 w q'_1)
        term1 = integrate(grid, 2.0 * (2.0 * omega * qp.q12 * lap1
                                       - 2.0 * omega * qp.q11 * lap2))
        # Q' lap Q - lap Q Q' = [[0, 2 psi], [-2 psi, 0]]
        psi = sign * (qp.q11 * lap2 - qp.q12 * lap1)
        px, py = _gradients(grid, psi)
        term2 = integrate(grid, 2.0 * py * u.ux - 2.0 * px * u.uy)
        scale = max(abs(term1), abs(term2), 1e-30)
        worst = max(worst, abs(term1 - term2) / scale)
    return worst


def lambda_pair_residual(grid, trials=50, seed=1, peak=4.0, a=-0.5, c=1.0):
    """Worst residual of (|Q| H, grad u) - (|Q| D, H) = (|Q| H, W) = 0."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        q = random_qfield(grid, rng, peak=peak)
        u = random_solenoidal(grid, rng, peak=peak)
        lap1 = _laplacian(grid, q.q11)
        lap2 = _laplacian(grid, q.q12)
        tr2 = 2.0 * (q.q11**2 + q.q12**2)
        h1 = lap1 - a * q.q11 - c * q.q11 * tr2
        h2 = lap2 - a * q.q12 - c * q.q12 * tr2
        qn = np.sqrt(tr2)
        ux_x, ux_y = _gradients(grid, u.ux)
        uy_x, uy_y = _gradients(grid, u.uy)
        lhs = integrate(grid, qn * (h1 * (ux_x - uy_y)
                                    + h2 * (ux_y + uy_x)))
        d_a = 0.5 * (ux_x - uy_y)
        d_b = 0.5 * (ux_y + uy_x)
        rhs = integrate(grid, 2.0 * qn * (d_a * h1 + d_b * h2))
        scale = max(abs(lhs), abs(rhs), 1e-30)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def advection_pair_residual(grid, trials=50, seed=2, peak=4.0):
    """Worst residual of (u.grad Q, lap Q) - (div(grad Q (.) grad Q), u) = 0
    for solenoidal u."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        q = random_qfield(grid, rng, peak=peak)
        u = random_solenoidal(grid, rng, peak=peak)
        q1x, q1y = _gradients(grid, q.q11)
        q2x, q2y = _gradients(grid, q.q12)
        lap1 = _laplacian(grid, q.q11)
        lap2 = _laplacian(grid, q.q12)
        adv1 = u.ux * q1x + u.uy * q1y
        adv2 = u.ux * q2x + u.uy * q2y
        term_a = integrate(grid, 2.0 * (adv1 * lap1 + adv2 * lap2))
        s11 = 2.0 * (q1x * q1x + q2x * q2x)
        s12 = 2.0 * (q1x * q1y + q2x * q2y)
        s22 = 2.0 * (q1y * q1y + q2y * q2y)
        div_x = inv(grid.ikx * fwd(s11) + grid.iky * fwd(s12))
        div_y = inv(grid.ikx * fwd(s12) + grid.iky * fwd(s22))
        term_b = integrate(grid, div_x * u.ux + div_y * u.uy)
        scale = max(abs(term_a), abs(term_b), 1e-30)
        worst = max(worst, abs(term_a - term_b) / scale)
    return worst


def transport_neutrality_residual(grid, trials=50, seed=3, peak=4.0):
    """Worst of |(u.grad Q, Q)| and |(u.grad u, u)| for solenoidal u,
    normalized by the transported field's squared norm rate scale."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        q = random_qfield(grid, rng, peak=peak)
        u = random_solenoidal(grid, rng, peak=peak)
        q1x, q1y = _gradients(grid, q.q11)
        q2x, q2y = _gradients(grid, q.q12)
        adv_q = integrate(grid, 2.0 * ((u.ux * q1x + u.uy * q1y) * q.q11
                                       + (u.ux * q2x + u.uy * q2y) * q.q12))
        ux_x, ux_y = _gradients(grid, u.ux)
        uy_x, uy_y = _gradients(grid, u.uy)
        adv_u = integrate(grid, (u.ux * ux_x + u.uy * ux_y) * u.ux
                          + (u.ux * uy_x + u.uy * uy_y) * u.uy)
        scale = max(integrate(grid, 2.0 * (q.q11**2 + q.q12**2)),
                    integrate(grid, u.ux**2 + u.uy**2), 1e-30)
        worst = max(worst, abs(adv_q) / scale, abs(adv_u) / scale)
    return worst


def corotation_neutrality_residual(grid, trials=50, seed=4, peak=4.0):
    """Worst of |(Q W - W Q, Q)| over the ensemble (skew against symmetric)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        q = random_qfield(grid, rng, peak=peak)
        u = random_solenoidal(grid, rng, peak=peak)
        ux_x, ux_y = _gradients(grid, u.ux)
        uy_x, uy_y = _gradients(grid, u.uy)
        omega = 0.5 * (ux_y - uy_x)
        val = integrate(grid, 2.0 * ((-2.0 * omega * q.q12) * q.q11
                                     + (2.0 * omega * q.q11) * q.q12))
        scale = max(integrate(grid, 2.0 * (q.q11**2 + q.q12**2)), 1e-30)
        worst = max(worst, abs(val) / scale)
    return worst
