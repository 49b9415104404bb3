"""Time integration: the stiff linear parts (mu lap u and Gamma lap Q)
are propagated exactly by exponential factors in Fourier space, and the
remaining terms go through a two-stage exponential Runge-Kutta rule
(predictor + trapezoidal corrector), second order in dt.  Order 1 keeps
only the predictor.

A run owns its state; records and snapshots stream through caller-supplied
sinks so file layout stays out of this module.  Runs are deterministic:
fixed dt, fixed evaluation order, no threading.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import BlowUpError, StateFields, rhs_nonstiff_spec
from .spectral import (
    QTensorField,
    VelocityField,
    dealias_spec,
    fwd,
    inv,
    leray_project_spec,
    truncate_band_spec,
)

__all__ = ["TimeSetup", "RunSinks", "cfl_dt", "step", "run"]


@dataclass
class TimeSetup:
    dt: float
    t_end: float
    scheme: int = 2
    cfl_target: float = 0.8
    dt_max: float = 1e-2
    adaptive: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.scheme not in (1, 2):
            raise ValueError("scheme order must be 1 or 2")
        if not 0 < self.cfl_target <= 1:
            raise ValueError("cfl_target must be in (0, 1]")


@dataclass
class RunSinks:
    energy: object = None     # called with (EnergyRecord)
    snapshot: object = None   # called with (StateFields)
    sample: object = None     # called with (StateFields)


def _phi1(z):
    out = np.ones_like(z)
    nz = z != 0.0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def _phi2(z):
    # (e^z - 1 - z) / z^2 with a series branch against cancellation
    out = np.full_like(z, 0.5)
    big = np.abs(z) >= 1e-2
    zb = z[big]
    out[big] = (np.expm1(zb) - zb) / (zb * zb)
    small = ~big & (z != 0.0)
    zs = z[small]
    out[small] = (0.5 + zs * (1.0 / 6.0 + zs * (1.0 / 24.0 + zs * (
        1.0 / 120.0 + zs / 720.0))))
    return out


def cfl_dt(state, p, cfl_target=0.8, dt_max=1e-2):
    """Advisory step size from the advective and reactive rates; the
    diffusive restriction is absorbed by the exponential treatment."""
    g = state.q.grid
    speed = np.hypot(state.u.ux, state.u.uy)
    qmag2 = 2.0 * (state.q.q11**2 + state.q.q12**2)
    if not (np.all(np.isfinite(speed)) and np.all(np.isfinite(qmag2))):
        raise BlowUpError("non-finite state in step-size estimate")
    h = g.length / g.n
    umax = float(speed.max())
    dt_adv = h / umax if umax > 0 else np.inf
    rate = p.Gamma * (abs(p.a) + 3.0 * p.c * float(qmag2.max()))
    dt_react = 1.0 / rate if rate > 0 else np.inf
    return float(min(dt_max, cfl_target * min(dt_adv, dt_react)))


class _SpectralState:
    """Spectral shadow of the four prognostic fields."""

    __slots__ = ("q1h", "q2h", "uxh", "uyh")

    def __init__(self, q1h, q2h, uxh, uyh):
        self.q1h = q1h
        self.q2h = q2h
        self.uxh = uxh
        self.uyh = uyh

    @classmethod
    def from_state(cls, grid, p, state):
        s = cls(fwd(state.q.q11), fwd(state.q.q12),
                fwd(state.u.ux), fwd(state.u.uy))
        s.enforce(grid, p)
        return s

    def enforce(self, grid, p):
        """Keep the state dealiased, solenoidal, and (for the truncated
        scheme) inside its invariant band."""
        self.q1h = dealias_spec(grid, self.q1h)
        self.q2h = dealias_spec(grid, self.q2h)
        uxh = dealias_spec(grid, self.uxh)
        uyh = dealias_spec(grid, self.uyh)
        if p.mode == "friedrichs":
            self.q1h = truncate_band_spec(grid, self.q1h, p.n_trunc)
            self.q2h = truncate_band_spec(grid, self.q2h, p.n_trunc)
            uxh = truncate_band_spec(grid, uxh, p.n_trunc)
            uyh = truncate_band_spec(grid, uyh, p.n_trunc)
        self.uxh, self.uyh = leray_project_spec(grid, uxh, uyh)

    def to_state(self, grid, t):
        return StateFields(
            t,
            QTensorField(grid, inv(self.q1h), inv(self.q2h)),
            VelocityField(grid, inv(self.uxh), inv(self.uyh)),
        )

    def check_finite(self):
        for arr in (self.q1h, self.q2h, self.uxh, self.uyh):
            if not np.all(np.isfinite(arr)):
                raise BlowUpError("non-finite spectral state")


class _Propagator:
    """Cached exponential factors for one (grid, params, dt) triple."""

    def __init__(self, grid, p, dt, scheme):
        self.grid = grid
        self.p = p
        self.dt = dt
        self.scheme = scheme
        zq = -p.Gamma * grid.k2 * dt
        zu = -p.mu * grid.k2 * dt
        self.eq = np.exp(zq)
        self.eu = np.exp(zu)
        self.f1q = dt * _phi1(zq)
        self.f1u = dt * _phi1(zu)
        if scheme == 2:
            self.f2q = dt * _phi2(zq)
            self.f2u = dt * _phi2(zu)

    def advance(self, s):
        g, p = self.grid, self.p
        n0 = rhs_nonstiff_spec(g, p, s.q1h, s.q2h, s.uxh, s.uyh)
        pred = _SpectralState(
            self.eq * s.q1h + self.f1q * n0[0],
            self.eq * s.q2h + self.f1q * n0[1],
            self.eu * s.uxh + self.f1u * n0[2],
            self.eu * s.uyh + self.f1u * n0[3],
        )
        pred.enforce(g, p)
        if self.scheme == 1:
            pred.check_finite()
            return pred
        n1 = rhs_nonstiff_spec(g, p, pred.q1h, pred.q2h, pred.uxh, pred.uyh)
        out = _SpectralState(
            pred.q1h + self.f2q * (n1[0] - n0[0]),
            pred.q2h + self.f2q * (n1[1] - n0[1]),
            pred.uxh + self.f2u * (n1[2] - n0[2]),
            pred.uyh + self.f2u * (n1[3] - n0[3]),
        )
        out.enforce(g, p)
        out.check_finite()
        return out


def step(state, p, dt, scheme=2):
    """Advance one step of size dt; exact on the linear subproblem."""
    g = state.q.grid
    prop = _Propagator(g, p, dt, scheme)
    s = _SpectralState.from_state(g, p, state)
    with np.errstate(over="ignore", invalid="ignore"):
        s = prop.advance(s)
    return s.to_state(g, state.t + dt)


def run(state0, p, setup, sinks=None, energy_every=1, snapshot_every=0,
        s_exponent=0.5):
    """March state0 to t_end, streaming energy records and snapshots.

    Returns the final state.  On blow-up the partial outputs have already
    reached the sinks; the error carries the last finite time.
    """
    from .diagnostics import energy
    from .littlewood_paley import build_partition

    g = state0.q.grid
    sinks = sinks or RunSinks()
    part = build_partition(g)
    nsteps = int(round(setup.t_end / setup.dt))
    if abs(nsteps * setup.dt - setup.t_end) > 1e-9 * max(setup.t_end, 1.0):
        raise ValueError("t_end must be an integer number of steps")
    s = _SpectralState.from_state(g, p, state0)
    prop = _Propagator(g, p, setup.dt, setup.scheme)

    def emit(i, spectral, t_now):
        state = spectral.to_state(g, t_now)
        if sinks.energy is not None and (
                i % energy_every == 0 or i == nsteps):
            sinks.energy(energy(state, p, part, s_exponent))
        if sinks.snapshot is not None and snapshot_every > 0 and (
                i % snapshot_every == 0 or i == nsteps):
            sinks.snapshot(state)
        if sinks.sample is not None and (
                i % energy_every == 0 or i == nsteps):
            sinks.sample(state)
        return state

    state = emit(0, s, state0.t)
    if nsteps == 0:
        return state
    t_now = state0.t
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, nsteps + 1):
            if setup.adaptive:
                dt_i = min(setup.dt, cfl_dt(
                    s.to_state(g, t_now), p, setup.cfl_target, setup.dt_max))
                prop_i = _Propagator(g, p, dt_i, setup.scheme)
                t_now += dt_i
            else:
                prop_i = prop
                t_now = state0.t + i * setup.dt
            try:
                s = prop_i.advance(s)
            except BlowUpError as err:
                raise BlowUpError(
                    f"blow-up at step {i} (t = {t_now:g}): {err}") from None
            state = emit(i, s, t_now)
    return state
