"""Right-hand sides of the coupled tensor / velocity system on the 2D
periodic grid, in three flavors:

  direct     : the plain strong form
  mollified  : advecting velocity, strain, vorticity and every momentum
               forcing smoothed by the Gaussian mollifier, plus the two
               coercive regularization forces scaled by eps
  friedrichs : the mollified form with the annulus truncation applied
               where the scheme places it (outer on the tensor equation,
               on each projected momentum forcing)

Index convention: (grad u)_{ab} = d_b u_a.  Tensor fields are stored by
their two independent components; matrix algebra below is hand-expanded
for that representation (the tests cross-check against a full-matrix
oracle).  Quadratic products are dealiased with the 2/3 rule; the cubic
and quartic regularization terms are left undealiased so their energy
pairing against the velocity stays exact, and they accept residual
aliasing instead.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import (
    QTensorField,
    VelocityField,
    dealias_spec,
    fwd,
    inv,
    leray_project_spec,
    mollify_spec,
    truncate_band_spec,
)

__all__ = [
    "StateFields",
    "RhsFields",
    "BlowUpError",
    "strain_vorticity",
    "q_rhs",
    "u_rhs",
    "eps_terms",
    "assemble_rhs",
    "rhs_nonstiff_spec",
]


class BlowUpError(RuntimeError):
    """Raised when a tendency or state stops being finite."""


@dataclass
class StateFields:
    t: float
    q: QTensorField
    u: VelocityField

    def copy(self):
        return StateFields(self.t, self.q.copy(), self.u.copy())


@dataclass
class RhsFields:
    dq: QTensorField
    du: VelocityField


def strain_vorticity(u):
    """Symmetric and antisymmetric parts of the velocity gradient.

    Returns ((d11, d12, d22), omega) where omega is the 12-entry of the
    spin tensor, so D + Omega reassembles grad u entrywise.
    """
    g = u.grid
    uxh, uyh = fwd(u.ux), fwd(u.uy)
    ux_x = inv(g.ikx * uxh)
    ux_y = inv(g.iky * uxh)
    uy_x = inv(g.ikx * uyh)
    uy_y = inv(g.iky * uyh)
    d12 = 0.5 * (ux_y + uy_x)
    omega = 0.5 * (ux_y - uy_x)
    return (ux_x, d12, uy_y), omega


def _check_finite(label, *arrays):
    for arr in arrays:
        if not np.all(np.isfinite(arr)):
            raise BlowUpError(f"non-finite values in {label}")


def rhs_nonstiff_spec(grid, p, q1h, q2h, uxh, uyh, with_eps_split=False):
    """Spectral tendencies with the exponentially-integrated linear parts
    (Gamma lap Q and mu lap u) excluded.  Returns
    (dq1h, dq2h, duxh, duyh) plus, when asked, the two regularization
    force spectra on their own.
    """
    fri = p.mode == "friedrichs"
    mol = p.mode in ("mollified", "friedrichs")
    eps = p.eps if mol else 0.0

    def smooth(fh):
        return mollify_spec(grid, fh, eps) if eps > 0.0 else fh

    def band(fh):
        return truncate_band_spec(grid, fh, p.n_trunc) if fri else fh

    def da(fh):
        return dealias_spec(grid, fh)

    # physical state and first derivatives
    q1 = inv(q1h)
    q2 = inv(q2h)
    ux = inv(uxh)
    uy = inv(uyh)
    q1x, q1y = inv(grid.ikx * q1h), inv(grid.iky * q1h)
    q2x, q2y = inv(grid.ikx * q2h), inv(grid.iky * q2h)
    lap1 = inv(-grid.k2 * q1h)
    lap2 = inv(-grid.k2 * q2h)

    ux_x, ux_y = inv(grid.ikx * uxh), inv(grid.iky * uxh)
    uy_x, uy_y = inv(grid.ikx * uyh), inv(grid.iky * uyh)
    # smoothed velocity v = R_eps u drives transport, rotation, strain
    if eps > 0.0:
        vxh, vyh = smooth(uxh), smooth(uyh)
        vx, vy = inv(vxh), inv(vyh)
        vx_x, vx_y = inv(grid.ikx * vxh), inv(grid.iky * vxh)
        vy_x, vy_y = inv(grid.ikx * vyh), inv(grid.iky * vyh)
    else:
        vx, vy = ux, uy
        vx_x, vx_y, vy_x, vy_y = ux_x, ux_y, uy_x, uy_y
    omega = 0.5 * (vx_y - vy_x)
    # traceless part of the strain: ((d11 - d22)/2, d12)
    d_a = 0.5 * (vx_x - vy_y)
    d_b = 0.5 * (vx_y + vy_x)

    qnorm = np.sqrt(2.0 * (q1 * q1 + q2 * q2))

    # ---- tensor equation ------------------------------------------------
    adv1 = vx * q1x + vy * q1y
    adv2 = vx * q2x + vy * q2y
    # Q Omega - Omega Q = [[-2 w q2, 2 w q1], [2 w q1, 2 w q2]]
    corot1 = -2.0 * omega * q2
    corot2 = 2.0 * omega * q1
    align1 = p.lam * qnorm * d_a
    align2 = p.lam * qnorm * d_b
    nl1 = -adv1 - corot1 + align1
    nl2 = -adv2 - corot2 + align2
    # polynomial part of the molecular field (the Laplacian is stiff)
    hp1 = -p.a * q1 - p.c * q1 * (qnorm * qnorm)
    hp2 = -p.a * q2 - p.c * q2 * (qnorm * qnorm)
    hp1h = band(da(fwd(hp1)))
    hp2h = band(da(fwd(hp2)))
    dq1h = band(da(fwd(nl1))) + p.Gamma * hp1h
    dq2h = band(da(fwd(nl2))) + p.Gamma * hp2h

    # molecular field as the momentum equation sees it (projected spectrum)
    h1h = -grid.k2 * q1h + hp1h
    h2h = -grid.k2 * q2h + hp2h
    h1 = inv(h1h)
    h2 = inv(h2h)

    # ---- momentum equation ----------------------------------------------
    adv_ux = vx * ux_x + vy * ux_y
    adv_uy = vx * uy_x + vy * uy_y
    fxh = -band(da(fwd(adv_ux)))
    fyh = -band(da(fwd(adv_uy)))

    # distortion stress grad Q (.) grad Q, entry (a,b) = d_a Q : d_b Q
    s11 = 2.0 * (q1x * q1x + q2x * q2x)
    s12 = 2.0 * (q1x * q1y + q2x * q2y)
    s22 = 2.0 * (q1y * q1y + q2y * q2y)
    s11h = band(smooth(da(fwd(s11))))
    s12h = band(smooth(da(fwd(s12))))
    s22h = band(smooth(da(fwd(s22))))
    fxh += -(grid.ikx * s11h + grid.iky * s12h)
    fyh += -(grid.ikx * s12h + grid.iky * s22h)

    # commutator stress Q lap Q - lap Q Q = [[0, 2 psi], [-2 psi, 0]]
    psi = q1 * lap2 - q2 * lap1
    psih = band(smooth(da(fwd(psi))))
    fxh += 2.0 * grid.iky * psih
    fyh += -2.0 * grid.ikx * psih

    # alignment stress |Q| H
    g1h = band(smooth(da(fwd(qnorm * h1))))
    g2h = band(smooth(da(fwd(qnorm * h2))))
    fxh += -p.lam * (grid.ikx * g1h + grid.iky * g2h)
    fyh += -p.lam * (grid.ikx * g2h - grid.iky * g1h)

    # active stress kappa Q (linear, no dealiasing needed)
    aq1h = band(smooth(q1h))
    aq2h = band(smooth(q2h))
    fxh += p.kappa * (grid.ikx * aq1h + grid.iky * aq2h)
    fyh += p.kappa * (grid.ikx * aq2h - grid.iky * aq1h)

    ex_h = ey_h = None
    if eps > 0.0:
        # transported-tensor force: grad Q contracted against the advective
        # derivative G = (v . grad) Q, weighted by |G|
        gq1 = vx * q1x + vy * q1y
        gq2 = vx * q2x + vy * q2y
        gn = np.sqrt(2.0 * (gq1 * gq1 + gq2 * gq2))
        f1x = 2.0 * (q1x * gq1 + q2x * gq2) * gn
        f1y = 2.0 * (q1y * gq1 + q2y * gq2) * gn
        # gradient-cubed force: div(grad v |grad v|^2)
        w = vx_x**2 + vx_y**2 + vy_x**2 + vy_y**2
        ex_h = -eps * band(smooth(fwd(f1x)))
        ey_h = -eps * band(smooth(fwd(f1y)))
        ex_h += eps * (grid.ikx * band(smooth(fwd(vx_x * w)))
                       + grid.iky * band(smooth(fwd(vx_y * w))))
        ey_h += eps * (grid.ikx * band(smooth(fwd(vy_x * w)))
                       + grid.iky * band(smooth(fwd(vy_y * w))))
        fxh += ex_h
        fyh += ey_h

    duxh, duyh = leray_project_spec(grid, fxh, fyh)
    if with_eps_split:
        if ex_h is None:
            zero = np.zeros_like(fxh)
            return dq1h, dq2h, duxh, duyh, (zero, zero.copy())
        return dq1h, dq2h, duxh, duyh, leray_project_spec(grid, ex_h, ey_h)
    return dq1h, dq2h, duxh, duyh


def _full_rhs_spec(grid, p, q1h, q2h, uxh, uyh):
    dq1h, dq2h, duxh, duyh = rhs_nonstiff_spec(grid, p, q1h, q2h, uxh, uyh)
    lap1, lap2 = -grid.k2 * q1h, -grid.k2 * q2h
    if p.mode == "friedrichs":
        # the scheme truncates the whole molecular field, Laplacian included
        lap1 = truncate_band_spec(grid, lap1, p.n_trunc)
        lap2 = truncate_band_spec(grid, lap2, p.n_trunc)
    dq1h = dq1h + p.Gamma * lap1
    dq2h = dq2h + p.Gamma * lap2
    duxh = duxh - p.mu * grid.k2 * uxh
    duyh = duyh - p.mu * grid.k2 * uyh
    return dq1h, dq2h, duxh, duyh


def q_rhs(state, p):
    """Full tensor tendency -(v.grad)Q - (Q W - W Q) + lam |Q| D + Gamma H."""
    g = state.q.grid
    dq1h, dq2h, _, _ = _full_rhs_spec(
        g, p, fwd(state.q.q11), fwd(state.q.q12),
        fwd(state.u.ux), fwd(state.u.uy))
    dq1, dq2 = inv(dq1h), inv(dq2h)
    _check_finite("tensor tendency", dq1, dq2)
    return QTensorField(g, dq1, dq2)


def u_rhs(state, p):
    """Full velocity tendency, Leray projected."""
    g = state.q.grid
    _, _, duxh, duyh = _full_rhs_spec(
        g, p, fwd(state.q.q11), fwd(state.q.q12),
        fwd(state.u.ux), fwd(state.u.uy))
    dux, duy = inv(duxh), inv(duyh)
    _check_finite("velocity tendency", dux, duy)
    return VelocityField(g, dux, duy)


def eps_terms(state, p):
    """The two coercive regularization forces on their own, projected.

    Their inner product against u equals
        -eps ||(R_eps u . grad) Q||_{L3}^3 - eps ||grad R_eps u||_{L4}^4
    which is what makes them admissible dissipation.
    """
    g = state.q.grid
    if p.eps == 0.0:
        zero = np.zeros((g.n, g.n))
        return VelocityField(g, zero, zero.copy())
    peff = p if p.mode in ("mollified", "friedrichs") else _as_mollified(p)
    _, _, _, _, (exh, eyh) = rhs_nonstiff_spec(
        g, peff, fwd(state.q.q11), fwd(state.q.q12),
        fwd(state.u.ux), fwd(state.u.uy), with_eps_split=True)
    return VelocityField(g, inv(exh), inv(eyh))


def _as_mollified(p):
    from dataclasses import replace

    return replace(p, mode="mollified")


def assemble_rhs(state, p):
    """Both tendencies in one pass (shared transforms)."""
    g = state.q.grid
    dq1h, dq2h, duxh, duyh = _full_rhs_spec(
        g, p, fwd(state.q.q11), fwd(state.q.q12),
        fwd(state.u.ux), fwd(state.u.uy))
    dq1, dq2 = inv(dq1h), inv(dq2h)
    dux, duy = inv(duxh), inv(duyh)
    _check_finite("assembled tendency", dq1, dq2, dux, duy)
    return RhsFields(QTensorField(g, dq1, dq2), VelocityField(g, dux, duy))
