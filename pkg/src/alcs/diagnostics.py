"""Energy functionals along trajectories and the checks built on them:
the dissipation identity and inequality, growth-envelope fits, twin-run
deltas, the discrete Gronwall verifier, and the interpolation-constant
sweep.

Convention: the dissipation ledger closes exactly (up to time
discretization) when every functional is evaluated the way the solver
sees it, so tr(H^2) uses the spectrally projected molecular field and the
activity pairs Q against the gradient of the advecting (smoothed)
velocity.  Fitted constants are reported, never asserted as universal.
"""

from dataclasses import dataclass

import numpy as np

from .littlewood_paley import split_low_high
from .spectral import (
    dealias_spec,
    fwd,
    integrate,
    inv,
    lp_norm,
    mollify_spec,
    truncate_band_spec,
)

__all__ = [
    "EnergyRecord",
    "TwinDelta",
    "energy",
    "attach_identity_residuals",
    "energy_identity",
    "energy_inequality",
    "apriori_monitor",
    "growth_bound_check",
    "twin_delta",
    "gronwall_envelope",
    "interpolation_check",
]

CSV_COLUMNS = [
    "t", "kinetic", "elastic", "bulk", "E", "diss_u", "diss_H", "activity",
    "residual", "hs_phi", "l2_Q", "l4_Q", "l6_Q", "eps_u_gradQ",
    "eps_grad_u",
]


@dataclass
class EnergyRecord:
    t: float
    kinetic: float
    elastic: float
    bulk: float
    E: float
    diss_u: float
    diss_H: float
    activity: float
    hs_phi: float
    l2_Q: float
    l4_Q: float
    l6_Q: float
    eps_u_gradQ: float
    eps_grad_u: float
    residual: float = float("nan")
    # extra monitors kept off the CSV schema
    dEdt: float = float("nan")
    lap_Q_l2: float = 0.0
    h1_Q: float = 0.0

    def csv_row(self):
        return [getattr(self, name) for name in CSV_COLUMNS]


@dataclass
class TwinDelta:
    t: float
    dQ_l2: float
    dQ_h1: float
    du_l2: float


def energy(state, p, part=None, s_exponent=0.5):
    """Instantaneous functionals of one state (no residual yet)."""
    g = state.q.grid
    q1, q2 = state.q.q11, state.q.q12
    ux, uy = state.u.ux, state.u.uy
    q1h, q2h = fwd(q1), fwd(q2)
    uxh, uyh = fwd(ux), fwd(uy)

    kinetic = 0.5 * integrate(g, ux * ux + uy * uy)
    q1x, q1y = inv(g.ikx * q1h), inv(g.iky * q1h)
    q2x, q2y = inv(g.ikx * q2h), inv(g.iky * q2h)
    grad_q2 = 2.0 * (q1x**2 + q1y**2 + q2x**2 + q2y**2)
    elastic = 0.5 * integrate(g, grad_q2)
    tr2 = 2.0 * (q1 * q1 + q2 * q2)
    bulk = integrate(g, 0.5 * p.a * tr2 + 0.25 * p.c * tr2 * tr2)
    total = kinetic + elastic + bulk

    ux_x, ux_y = inv(g.ikx * uxh), inv(g.iky * uxh)
    uy_x, uy_y = inv(g.ikx * uyh), inv(g.iky * uyh)
    diss_u = p.mu * integrate(g, ux_x**2 + ux_y**2 + uy_x**2 + uy_y**2)

    # molecular field exactly as the tendency uses it: polynomial part
    # dealiased (and band-truncated in the truncated scheme)
    fri = p.mode == "friedrichs"
    lap1h, lap2h = -g.k2 * q1h, -g.k2 * q2h
    hp1h = dealias_spec(g, fwd(-p.a * q1 - p.c * q1 * tr2))
    hp2h = dealias_spec(g, fwd(-p.a * q2 - p.c * q2 * tr2))
    if fri:
        lap1h = truncate_band_spec(g, lap1h, p.n_trunc)
        lap2h = truncate_band_spec(g, lap2h, p.n_trunc)
        hp1h = truncate_band_spec(g, hp1h, p.n_trunc)
        hp2h = truncate_band_spec(g, hp2h, p.n_trunc)
    h1, h2 = inv(lap1h + hp1h), inv(lap2h + hp2h)
    diss_H = p.Gamma * integrate(g, 2.0 * (h1 * h1 + h2 * h2))

    mol = p.mode in ("mollified", "friedrichs")
    eps = p.eps if mol else 0.0
    if eps > 0.0:
        vxh = mollify_spec(g, uxh, eps)
        vyh = mollify_spec(g, uyh, eps)
        vx_x, vx_y = inv(g.ikx * vxh), inv(g.iky * vxh)
        vy_x, vy_y = inv(g.ikx * vyh), inv(g.iky * vyh)
        activity = -p.kappa * integrate(
            g, q1 * (vx_x - vy_y) + q2 * (vx_y + vy_x))
        gq1 = inv(vxh) * q1x + inv(vyh) * q1y
        gq2 = inv(vxh) * q2x + inv(vyh) * q2y
        eps_u_gradq = eps * integrate(
            g, (2.0 * (gq1 * gq1 + gq2 * gq2)) ** 1.5)
        wsq = vx_x**2 + vx_y**2 + vy_x**2 + vy_y**2
        eps_grad_u = eps * integrate(g, wsq * wsq)
    else:
        activity = -p.kappa * integrate(
            g, q1 * (ux_x - uy_y) + q2 * (ux_y + uy_x))
        eps_u_gradq = 0.0
        eps_grad_u = 0.0

    qn = np.sqrt(tr2)
    l2_q = integrate(g, tr2)
    l4_q = integrate(g, tr2 * tr2)
    l6_q = integrate(g, qn**6)
    lap_q_l2 = integrate(g, 2.0 * (inv(lap1h) ** 2 + inv(lap2h) ** 2))
    hs_phi = 0.0
    if part is not None:
        _, _, hs_phi = split_low_high(part, state.q, state.u, s_exponent)
    return EnergyRecord(
        t=state.t, kinetic=kinetic, elastic=elastic, bulk=bulk, E=total,
        diss_u=diss_u, diss_H=diss_H, activity=activity, hs_phi=hs_phi,
        l2_Q=l2_q, l4_Q=l4_q, l6_Q=l6_q, eps_u_gradQ=eps_u_gradq,
        eps_grad_u=eps_grad_u, lap_Q_l2=lap_q_l2,
        h1_Q=l2_q + 2.0 * elastic,
    )


def _identity_parts(rec, dEdt):
    lhs = (dEdt + rec.diss_u + rec.diss_H - rec.activity
           + rec.eps_u_gradQ + rec.eps_grad_u)
    scale = max(abs(dEdt), rec.diss_u + rec.diss_H, abs(rec.activity),
                1e-30)
    return lhs, scale


def energy_identity(rec_prev, rec_mid, rec_next):
    """Residual of dE/dt + mu ||grad u||^2 + Gamma tr(H^2) + kappa (Q, grad u)
    (+ the eps dissipations when active) at the middle record, with a
    centered time derivative."""
    dt1 = rec_mid.t - rec_prev.t
    dt2 = rec_next.t - rec_mid.t
    if abs(dt1 - dt2) > 1e-9 * max(dt1, dt2):
        raise ValueError("records are not uniformly spaced in time")
    dEdt = (rec_next.E - rec_prev.E) / (dt1 + dt2)
    lhs, scale = _identity_parts(rec_mid, dEdt)
    return abs(lhs) / scale


def attach_identity_residuals(records):
    """Fill dEdt and residual on a uniformly spaced record series
    (centered differences inside, one-sided at the ends)."""
    n = len(records)
    if n == 0:
        return records
    if n == 1:
        records[0].dEdt = 0.0
        lhs, scale = _identity_parts(records[0], 0.0)
        records[0].residual = abs(lhs) / scale
        return records
    for i, rec in enumerate(records):
        if i == 0:
            dEdt = (records[1].E - records[0].E) / (
                records[1].t - records[0].t)
        elif i == n - 1:
            dEdt = (records[-1].E - records[-2].E) / (
                records[-1].t - records[-2].t)
        else:
            dEdt = (records[i + 1].E - records[i - 1].E) / (
                records[i + 1].t - records[i - 1].t)
        rec.dEdt = dEdt
        lhs, scale = _identity_parts(rec, dEdt)
        rec.residual = abs(lhs) / scale
    return records


def energy_inequality(rec, p):
    """Margin of the dissipation inequality with the explicit constant
    kappa^2 / (2 mu):

        margin = (kappa^2 / 2 mu) ||Q||_L2^2
                 - (dE/dt + (mu/2)||grad u||^2 + Gamma tr(H^2))

    Nonnegative up to time-discretization error; requires the record's
    dEdt (attach_identity_residuals first).  Also returns the scale used
    to normalize violations.
    """
    if not np.isfinite(rec.dEdt):
        raise ValueError("record has no time derivative attached")
    # diss_u stores mu ||grad u||^2, so half of it is (mu/2)||grad u||^2
    lhs = rec.dEdt + 0.5 * rec.diss_u + rec.diss_H
    rhs = (p.kappa**2 / (2.0 * p.mu)) * rec.l2_Q
    scale = max(abs(rec.dEdt), rec.diss_u + rec.diss_H, abs(rec.activity),
                rhs, 1e-30)
    return rhs - lhs, scale


def apriori_monitor(records, p):
    """Fit exponential envelopes to the H^1 tensor norm and the
    kinetic-plus-dissipation budget; the fitted constants always cover
    the series by construction and are reported, not asserted."""
    if not records:
        raise ValueError("empty record series")
    t = np.array([r.t for r in records])
    h1 = np.array([r.h1_Q for r in records])
    denom = records[0].h1_Q + 2.0 * records[0].kinetic
    if denom == 0.0:
        return {"C1": 0.0, "C2": 0.0, "C3": 0.0, "C4": 0.0, "covered": True}
    y = h1 / denom
    pos = y > 0
    if pos.sum() >= 2 and np.ptp(t[pos]) > 0:
        slope = np.polyfit(t[pos], np.log(y[pos]), 1)[0]
    else:
        slope = 0.0
    c2 = max(0.0, float(slope))
    c1 = float(np.max(y * np.exp(-c2 * t))) if len(t) else 0.0
    # kinetic + (mu/4) integral of ||grad u||^2
    grad2 = np.array([r.diss_u / p.mu for r in records])
    budget = np.array([r.kinetic for r in records]) + 0.25 * p.mu * _cumtrapz(
        t, grad2)
    c3 = float(np.max(budget / (denom * np.exp(c2 * t))))
    covered = bool(np.all(h1 <= c1 * denom * np.exp(c2 * t) * (1 + 1e-12))
                   and np.all(budget <= c3 * denom * np.exp(c2 * t)
                              * (1 + 1e-12)))
    return {"C1": c1, "C2": c2, "C3": c3, "C4": 0.0, "covered": covered}


def growth_bound_check(t, phi):
    """Linear cover of log log(e + phi): fitted (alpha, beta >= 0) with the
    cover holding at every sample; reports the fit's R^2."""
    t = np.asarray(t, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0):
        raise ValueError("phi must be nonnegative")
    z = np.log(np.log(np.e + phi))
    if len(t) >= 2 and np.ptp(t) > 0:
        beta_ls, alpha_ls = np.polyfit(t, z, 1)
        zhat = alpha_ls + beta_ls * t
        ss_res = float(np.sum((z - zhat) ** 2))
        ss_tot = float(np.sum((z - z.mean()) ** 2))
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    else:
        beta_ls, r2 = 0.0, 1.0
    beta = max(0.0, float(beta_ls))
    alpha = float(np.max(z - beta * t))
    covered = bool(np.all(z <= alpha + beta * t + 1e-12))
    return {"alpha": alpha, "beta": beta, "r2": r2, "covered": covered}


def twin_delta(state_a, state_b):
    ga, gb = state_a.q.grid, state_b.q.grid
    if ga.n != gb.n or ga.length != gb.length:
        raise ValueError("twin states live on different grids")
    dq1 = state_a.q.q11 - state_b.q.q11
    dq2 = state_a.q.q12 - state_b.q.q12
    dq_l2 = integrate(ga, 2.0 * (dq1 * dq1 + dq2 * dq2))
    d1h, d2h = fwd(dq1), fwd(dq2)
    grad2 = 2.0 * (inv(ga.ikx * d1h) ** 2 + inv(ga.iky * d1h) ** 2
                   + inv(ga.ikx * d2h) ** 2 + inv(ga.iky * d2h) ** 2)
    dq_h1 = dq_l2 + integrate(ga, grad2)
    dux = state_a.u.ux - state_b.u.ux
    duy = state_a.u.uy - state_b.u.uy
    du_l2 = integrate(ga, dux * dux + duy * duy)
    return TwinDelta(state_a.t, dq_l2, dq_h1, du_l2)


def _cumtrapz(t, y):
    out = np.zeros_like(y)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def gronwall_envelope(t, y, alpha, beta, rtol=1e-9, atol=0.0):
    """Discrete Gronwall check: does
        y(t) <= y(0) exp(int alpha) + int beta exp(int_s^t alpha)
    hold at every sample (trapezoid quadrature)?  Returns (ok, envelope).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if not (len(t) == len(y) == len(alpha) == len(beta)):
        raise ValueError("series must share one time grid")
    if np.any(alpha < 0) or np.any(beta < 0):
        raise ValueError("alpha and beta must be nonnegative")
    a_int = _cumtrapz(t, alpha)
    src = _cumtrapz(t, beta * np.exp(-a_int))
    env = np.exp(a_int) * (y[0] + src)
    ok = bool(np.all(y <= env * (1.0 + rtol) + atol))
    return ok, env


def interpolation_check(qfield):
    """Observed constant in ||grad Q||_L3 <= C ||D2 Q||_L2^1/2 ||Q||_L6^1/2."""
    g = qfield.grid
    q1h, q2h = fwd(qfield.q11), fwd(qfield.q12)
    gmag = np.sqrt(2.0 * (inv(g.ikx * q1h) ** 2 + inv(g.iky * q1h) ** 2
                          + inv(g.ikx * q2h) ** 2 + inv(g.iky * q2h) ** 2))
    lhs = lp_norm(g, gmag, 3)
    lap2 = 2.0 * (inv(-g.k2 * q1h) ** 2 + inv(-g.k2 * q2h) ** 2)
    d2 = np.sqrt(integrate(g, lap2))
    qmag = np.sqrt(2.0 * (qfield.q11**2 + qfield.q12**2))
    l6 = lp_norm(g, qmag, 6)
    rhs = np.sqrt(d2) * np.sqrt(l6)
    if rhs == 0.0:
        raise ValueError("zero field has no interpolation constant")
    return {"lhs": lhs, "rhs_factor": rhs, "C": lhs / rhs}
