"""Experiment drivers behind the CLI: initial conditions, single runs with
file outputs, the invariant check suite, twin-run comparisons, and
one-axis parameter sweeps.

Exit codes: 0 clean, 1 failed checks, 2 blow-up (partial outputs on
disk), 3 I/O failure, 4 incompatible twin configurations.
"""

import os
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import config_echo
from .diagnostics import (
    attach_identity_residuals,
    energy_identity,
    gronwall_envelope,
    interpolation_check,
    twin_delta,
)
from .dynamics import BlowUpError, StateFields
from .fields import (
    random_qfield,
    random_solenoidal,
    taylor_green,
    uniform_director,
)
from .integrator import RunSinks, run
from .littlewood_paley import (
    bony_decompose,
    build_partition,
    decompose,
    sobolev_norm,
)
from .snapshots import (
    read_snapshot,
    write_energy_csv,
    write_snapshot,
    write_twin_csv,
)
from .spectral import (
    QTensorField,
    VelocityField,
    dealias,
    divergence,
    fwd,
    gradient,
    inv,
    l2_norm2,
    leray_project,
    lp_norm,
    mollify,
    truncate_band,
)
from .tensor_algebra import QTensor, trace_powers
from .verification import (
    advection_pair_residual,
    corotation_neutrality_residual,
    lambda_pair_residual,
    rotation_stress_ensemble,
    transport_neutrality_residual,
)

__all__ = ["make_initial", "execute_run", "execute_check", "execute_twin",
           "execute_sweep", "run_check_suite"]

def make_initial(cfg):
    """Build the initial state: seeded, Leray-projected, dealiased, and
    prepared for the configured approximation mode (mollified data for
    the smoothed system, band-truncated data for the truncated one)."""
    grid = cfg.grid()
    rng = np.random.default_rng(cfg.seed)
    t0 = 0.0
    if cfg.ic == "taylor_green":
        zeros = np.zeros((grid.n, grid.n))
        q = QTensorField(grid, zeros.copy(), zeros.copy())
        u = taylor_green(grid, cfg.amplitude)
    elif cfg.ic == "random_spectrum":
        q = random_qfield(grid, rng, peak=cfg.peak_wavenumber,
                          amplitude=cfg.amplitude)
        u = random_solenoidal(grid, rng, peak=cfg.peak_wavenumber,
                              amplitude=cfg.amplitude)
    elif cfg.ic == "uniform_director":
        q = uniform_director(grid, cfg.s_order, cfg.director_angle,
                             cfg.noise_amplitude, rng)
        zeros = np.zeros((grid.n, grid.n))
        u = VelocityField(grid, zeros.copy(), zeros.copy())
    elif cfg.ic == "file":
        state = read_snapshot(cfg.ic_file)
        if (state.q.grid.n != cfg.N
                or abs(state.q.grid.length - cfg.L) > 1e-12 * cfg.L):
            raise ValueError(
                f"snapshot grid ({state.q.grid.n}, {state.q.grid.length:g})"
                f" does not match configured ({cfg.N}, {cfg.L:g})")
        q, u, t0 = state.q, state.u, state.t
        grid = state.q.grid
    else:  # pragma: no cover - guarded by config validation
        raise ValueError(f"unknown ic {cfg.ic!r}")

    if cfg.mode in ("mollified", "friedrichs") and cfg.eps > 0:
        q = QTensorField(grid, mollify(grid, q.q11, cfg.eps),
                         mollify(grid, q.q12, cfg.eps))
        u = VelocityField(grid, mollify(grid, u.ux, cfg.eps),
                          mollify(grid, u.uy, cfg.eps))
    if cfg.mode == "friedrichs":
        q = QTensorField(grid, truncate_band(grid, q.q11, cfg.n_trunc),
                         truncate_band(grid, q.q12, cfg.n_trunc))
        u = VelocityField(grid, truncate_band(grid, u.ux, cfg.n_trunc),
                          truncate_band(grid, u.uy, cfg.n_trunc))
    u = leray_project(u)
    q = QTensorField(grid, dealias(grid, q.q11), dealias(grid, q.q12))
    u = VelocityField(grid, dealias(grid, u.ux), dealias(grid, u.uy))
    return StateFields(t0, q, u)

def execute_run(cfg, out_dir=None, quiet=False):
    """Full simulation with streamed diagnostics; returns
    (exit_code, records)."""
    out = Path(out_dir if out_dir is not None else cfg.resolved_out_dir())
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        if not quiet:
            print(f"cannot create output directory: {err}")
        return 3, []
    records = []
    counter = {"snap": 0}

    def snap_sink(state):
        path = out / f"snapshot_{counter['snap']:06d}.snap"
        write_snapshot(path, state)
        counter["snap"] += 1

    state0 = make_initial(cfg)
    p = cfg.params()
    setup = cfg.time_setup(t_start=state0.t)
    sinks = RunSinks(energy=records.append,
                     snapshot=snap_sink if cfg.snapshot_every > 0 else None)
    code = 0
    final = None
    try:
        final = run(state0, p, setup, sinks,
                    energy_every=cfg.energy_every,
                    snapshot_every=cfg.snapshot_every,
                    s_exponent=cfg.s_exponent)
    except BlowUpError as err:
        if not quiet:
            print(f"run aborted: {err}")
        code = 2
    try:
        attach_identity_residuals(records)
        write_energy_csv(out / "energy.csv", records)
        with open(out / "config_echo.cfg", "w", encoding="utf-8") as fh:
            fh.write(config_echo(cfg))
        if final is not None:
            write_snapshot(out / "checkpoint.snap", final)
    except OSError as err:
        if not quiet:
            print(f"output failure: {err}")
        return 3, records
    return code, records

def run_check_suite(cfg, flip_stress_sign=False):
    """The invariant suite: returns a list of
    (name, observed, tolerance, passed).  cfg.checks selects suites by
    comma-separated name prefixes ("all" keeps everything)."""
    grid = cfg.grid()
    part = build_partition(grid)
    rng = np.random.default_rng(2024)
    results = []
    wanted = [w.strip() for w in cfg.checks.split(",") if w.strip()]

    def selected(name):
        return "all" in wanted or any(name.startswith(w) for w in wanted)

    def add(name, observed, tol):
        if selected(name):
            results.append((name, float(observed), tol,
                            bool(observed <= tol)))

    # pointwise tensor identities in 2D
    if selected("tensor") or selected("trace"):
        comps = rng.uniform(-1.0, 1.0, (100_000, 2))
        q = QTensor(2, comps)
        from .tensor_algebra import full_matrix

        m = full_matrix(q)
        m2 = np.einsum("nab,nbc->nac", m, m)
        tr2 = np.einsum("naa->n", m2)
        dev = m2 - 0.5 * tr2[:, None, None] * np.eye(2)
        add("tensor_square_identity_2d",
            np.sqrt(np.einsum("nab,nab->n", dev, dev)).max(), 1e-14)
        _, tr3, _ = trace_powers(q)
        add("tensor_cubic_trace_2d", np.abs(tr3).max(), 1e-15)

        q3 = QTensor(3, rng.uniform(-2.0, 2.0, (100_000, 5)))
        t2, t3, t4 = trace_powers(q3)
        violations = 0
        for eps in (0.01, 0.1, 1.0, 10.0, 100.0):
            rhs = 0.25 * eps * t4 + t2 / eps
            violations += int(np.sum(t3 > rhs + 1e-12 * (1.0 + np.abs(rhs))))
        add("trace_cubic_bound_violations", violations, 0)

    # projector properties
    if selected("leray"):
        u = random_solenoidal(grid, rng, peak=3.0)
        raw = VelocityField(grid, u.ux + rng.standard_normal((grid.n, grid.n)),
                            u.uy)
        proj = leray_project(raw)
        scale = max(np.abs(proj.ux).max(), np.abs(proj.uy).max(), 1e-30)
        add("leray_divergence",
            np.abs(divergence(grid, proj.ux, proj.uy)).max() / scale, 1e-12)
        twice = leray_project(proj)
        add("leray_idempotent",
            np.sqrt(l2_norm2(grid, twice.ux - proj.ux)
                    + l2_norm2(grid, twice.uy - proj.uy))
            / np.sqrt(l2_norm2(grid, proj.ux) + l2_norm2(grid, proj.uy)),
            1e-13)
        X, Y = grid.xy
        phi = np.sin(2 * np.pi * (X + Y) / grid.length)
        gx, gy = gradient(grid, phi)
        killed = leray_project(VelocityField(grid, gx, gy))
        gnorm = np.sqrt(l2_norm2(grid, gx) + l2_norm2(grid, gy))
        add("leray_annihilates_gradients",
            np.sqrt(l2_norm2(grid, killed.ux) + l2_norm2(grid, killed.uy))
            / gnorm, 1e-12)

    # dyadic machinery
    if (selected("partition") or selected("block")
            or selected("bony") or selected("sobolev")):
        add("partition_sum", np.abs(part.sum_of_multipliers() - 1.0).max(),
            1e-12)
        f = dealias(grid, rng.standard_normal((grid.n, grid.n)))
        rec = decompose(part, f).reconstruct()
        add("block_reconstruction",
            np.sqrt(l2_norm2(grid, rec - f) / l2_norm2(grid, f)), 1e-10)
        g2 = dealias(grid, rng.standard_normal((grid.n, grid.n)))
        tu, tv, rem = bony_decompose(part, f, g2)
        prod = f * g2
        add("bony_reconstruction",
            np.sqrt(l2_norm2(grid, tu + tv + rem - prod)
                    / max(l2_norm2(grid, prod), 1e-30)), 1e-9)
        worst_ratio = 1.0
        norm = grid.length**2 / grid.n**4
        for s in (0.0, 0.5, 1.0, 2.0):
            for _ in range(10):
                fld = dealias(grid, rng.standard_normal((grid.n, grid.n)))
                fh = fwd(fld)
                direct = np.sqrt(norm * float(
                    np.sum((1.0 + grid.k2) ** s * np.abs(fh) ** 2)))
                ratio = sobolev_norm(part, fld, s) / direct
                worst_ratio = max(worst_ratio, ratio, 1.0 / ratio)
        add("sobolev_equivalence_ratio", worst_ratio, 4.0)

    # integral cancellations
    if (selected("rotation") or selected("alignment")
            or selected("advection") or selected("transport")
            or selected("corotation")):
        add("rotation_stress_cancellation",
            rotation_stress_ensemble(grid, trials=100, seed=7,
                              flip_stress_sign=flip_stress_sign), 1e-10)
        add("alignment_pair_cancellation",
            lambda_pair_residual(grid, trials=25, seed=8), 1e-10)
        add("advection_pair_cancellation",
            advection_pair_residual(grid, trials=25, seed=9), 1e-9)
        add("transport_neutrality",
            transport_neutrality_residual(grid, trials=25, seed=10), 1e-10)
        add("corotation_neutrality",
            corotation_neutrality_residual(grid, trials=25, seed=11), 1e-10)

    # short trajectory: dissipation identity
    if selected("energy_identity_residual"):
        dt = min(cfg.dt, 1e-3)
        short = replace(cfg, dt=dt, t_end=40 * dt, energy_every=1,
                        snapshot_every=0, ic="random_spectrum")
        records = []
        state0 = make_initial(short)
        try:
            run(state0, short.params(), short.time_setup(),
                RunSinks(energy=records.append), s_exponent=short.s_exponent)
            attach_identity_residuals(records)
            worst_res = max(r.residual for r in records[1:-1])
        except BlowUpError:
            worst_res = np.inf
        add("energy_identity_residual", worst_res, 1e-4)

    if selected("interpolation_constant"):
        worst_c = 0.0
        for _ in range(25):
            qf = random_qfield(grid, rng, peak=rng.uniform(2.0, 8.0))
            worst_c = max(worst_c, interpolation_check(qf)["C"])
        add("interpolation_constant", worst_c, 10.0)

    return results

def execute_check(cfg, flip_stress_sign=False, quiet=False):
    results = run_check_suite(cfg, flip_stress_sign=flip_stress_sign)
    width = max(len(r[0]) for r in results)
    ok = True
    for name, observed, tol, passed in results:
        ok &= passed
        if not quiet:
            status = "PASS" if passed else "FAIL"
            print(f"{name:<{width}}  {status}  "
                  f"(observed {observed:.3e}, tolerance {tol:g})")
    if not quiet:
        print("all checks passed" if ok else "CHECK SUITE FAILED")
    return 0 if ok else 1

def _ic_signature(cfg):
    return (cfg.N, cfg.L, cfg.ic, cfg.seed, cfg.amplitude,
            cfg.peak_wavenumber, cfg.director_angle, cfg.s_order,
            cfg.noise_amplitude, cfg.ic_file)

def _strong_coefficient(state):
    """Coefficient 1 + ||Q||_inf^2 + ||grad Q||_inf^2 + ||u||_inf^2
    + ||lap Q||_L4^2 + ||grad u||_L4^2 from a strong-run sample, the
    norms controlling the twin-difference growth rate."""
    g = state.q.grid
    q1h, q2h = fwd(state.q.q11), fwd(state.q.q12)
    uxh, uyh = fwd(state.u.ux), fwd(state.u.uy)
    qmag = np.sqrt(2.0 * (state.q.q11**2 + state.q.q12**2))
    gq = np.sqrt(2.0 * (inv(g.ikx * q1h) ** 2 + inv(g.iky * q1h) ** 2
                        + inv(g.ikx * q2h) ** 2 + inv(g.iky * q2h) ** 2))
    umag = np.hypot(state.u.ux, state.u.uy)
    lapq = np.sqrt(2.0 * (inv(-g.k2 * q1h) ** 2 + inv(-g.k2 * q2h) ** 2))
    gu = np.sqrt(inv(g.ikx * uxh) ** 2 + inv(g.iky * uxh) ** 2
                 + inv(g.ikx * uyh) ** 2 + inv(g.iky * uyh) ** 2)
    return (1.0 + float(qmag.max()) ** 2 + float(gq.max()) ** 2
            + float(umag.max()) ** 2 + lp_norm(g, lapq, 4) ** 2
            + lp_norm(g, gu, 4) ** 2)

def execute_twin(cfg_a, cfg_b, out_dir=None, quiet=False):
    """Run two configurations from identical initial data and compare."""
    if (cfg_a.N, cfg_a.L) != (cfg_b.N, cfg_b.L):
        if not quiet:
            print("twin runs must share a grid")
        return 4, None
    if _ic_signature(cfg_a) != _ic_signature(cfg_b):
        if not quiet:
            print("twin runs must share the initial data specification")
        return 4, None
    if abs(cfg_a.t_end - cfg_b.t_end) > 1e-12:
        if not quiet:
            print("twin runs must share t_end")
        return 4, None
    dt_c, dt_f = max(cfg_a.dt, cfg_b.dt), min(cfg_a.dt, cfg_b.dt)
    ratio = dt_c / dt_f
    if abs(ratio - round(ratio)) > 1e-9:
        if not quiet:
            print("twin step sizes must divide one another")
        return 4, None
    nsteps_c = int(round(cfg_a.t_end / dt_c))
    stride = max(1, nsteps_c // 200)
    t_samp = stride * dt_c

    def sample_states(cfg):
        every = int(round(t_samp / cfg.dt))
        states = []
        run(make_initial(cfg), cfg.params(), cfg.time_setup(),
            RunSinks(sample=lambda s: states.append(s)),
            energy_every=every, s_exponent=cfg.s_exponent)
        return states

    states_a = sample_states(cfg_a)
    states_b = sample_states(cfg_b)
    if len(states_a) != len(states_b):
        if not quiet:
            print("twin sampling failed to align")
        return 4, None
    deltas = [twin_delta(sa, sb) for sa, sb in zip(states_a, states_b)]
    # the finer run plays the strong solution
    strong = states_a if cfg_a.dt <= cfg_b.dt else states_b
    coeffs = np.array([_strong_coefficient(s) for s in strong])
    t = np.array([d.t for d in deltas])
    y = np.array([d.dQ_h1 + d.du_l2 for d in deltas])

    report = {"identical": bool(np.max(y) <= 1e-24) if len(y) else True,
              "C": 0.0, "covered": True, "final_delta": float(y[-1])}
    if not report["identical"]:
        nz = np.nonzero(y > 0)[0]
        i0 = int(nz[0])
        a_int = np.concatenate([[0.0], np.cumsum(
            0.5 * (coeffs[1:] + coeffs[:-1]) * np.diff(t))])
        grow = a_int[i0:] - a_int[i0]
        with np.errstate(divide="ignore", invalid="ignore"):
            cands = np.where(grow[1:] > 0,
                             np.log(np.maximum(y[i0 + 1:], 1e-300)
                                    / y[i0]) / grow[1:], 0.0)
        c_fit = max(0.0, float(np.max(cands))) if len(cands) else 0.0
        ok, _ = gronwall_envelope(t[i0:], y[i0:], c_fit * coeffs[i0:],
                                  np.zeros(len(t) - i0), rtol=1e-6)
        report["C"] = c_fit
        report["covered"] = bool(ok)

    out = Path(out_dir if out_dir is not None else cfg_a.resolved_out_dir())
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_twin_csv(out / "twin.csv", deltas)
    except OSError as err:
        if not quiet:
            print(f"output failure: {err}")
        return 3, report
    if not quiet:
        verdict = "holds" if report["covered"] else "VIOLATED"
        print(f"twin deltas written ({len(deltas)} samples); "
              f"final |delta|^2 = {report['final_delta']:.3e}; "
              f"growth envelope {verdict} (fitted C = {report['C']:.3g})")
    return 0, report

_SWEEP_AXES = {"kappa": "kappa", "eps": "eps", "n_trunc": "n_trunc"}

def execute_sweep(cfg, axis, values, out_dir=None, quiet=False):
    """Batch of runs along one axis with a boundedness summary."""
    if axis not in _SWEEP_AXES:
        if not quiet:
            print(f"unknown sweep axis {axis!r}")
        return 1, []
    out_root = Path(out_dir if out_dir is not None
                    else cfg.resolved_out_dir())
    rows = []
    worst = 0
    for value in values:
        val = int(value) if axis == "n_trunc" else float(value)
        sub = replace(cfg, **{_SWEEP_AXES[axis]: val})
        sub_dir = out_root / f"{axis}_{val:g}"
        code, records = execute_run(sub, out_dir=sub_dir, quiet=quiet)
        worst = max(worst, code)
        t = np.array([r.t for r in records])
        row = {"axis": axis, "value": val, "exit": code}
        if records:
            row["max_h1_Q"] = max(r.h1_Q for r in records)
            row["max_u_l2"] = max(2.0 * r.kinetic for r in records)
            gu = np.array([r.diss_u / sub.mu for r in records])
            lq = np.array([r.lap_Q_l2 for r in records])
            row["int_grad_u2"] = float(np.trapezoid(gu, t)) if len(t) > 1 \
                else 0.0
            row["int_lap_Q2"] = float(np.trapezoid(lq, t)) if len(t) > 1 \
                else 0.0
            row["max_eps_u_gradQ"] = max(r.eps_u_gradQ for r in records)
            row["max_eps_grad_u"] = max(r.eps_grad_u for r in records)
        else:
            for key in ("max_h1_Q", "max_u_l2", "int_grad_u2",
                        "int_lap_Q2", "max_eps_u_gradQ", "max_eps_grad_u"):
                row[key] = float("nan")
        rows.append(row)
    cols = ["axis", "value", "max_h1_Q", "max_u_l2", "int_grad_u2",
            "int_lap_Q2", "max_eps_u_gradQ", "max_eps_grad_u", "exit"]
    try:
        out_root.mkdir(parents=True, exist_ok=True)
        with open(out_root / "sweep_summary.csv", "w",
                  encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(
                    row["axis"] if c == "axis" else repr(float(row[c]))
                    if c != "exit" else str(row[c]) for c in cols) + "\n")
    except OSError as err:
        if not quiet:
            print(f"output failure: {err}")
        return 3, rows
    return worst, rows
