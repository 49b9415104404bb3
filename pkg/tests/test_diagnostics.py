import numpy as np
import pytest

from alcs.diagnostics import (
    apriori_monitor,
    attach_identity_residuals,
    energy,
    energy_identity,
    energy_inequality,
    gronwall_envelope,
    growth_bound_check,
    interpolation_check,
    twin_delta,
)
from alcs.dynamics import StateFields
from alcs.fields import random_qfield, random_solenoidal, taylor_green
from alcs.integrator import RunSinks, TimeSetup, run
from alcs.littlewood_paley import build_partition
from alcs.spectral import Grid2D, QTensorField, VelocityField
from alcs.tensor_algebra import ModelParams


@pytest.fixture(scope="module")
def grid():
    return Grid2D(64, 2.0 * np.pi)


@pytest.fixture(scope="module")
def part(grid):
    return build_partition(grid)


def zero_state(grid):
    z = np.zeros((grid.n, grid.n))
    return StateFields(0.0, QTensorField(grid, z.copy(), z.copy()),
                       VelocityField(grid, z.copy(), z.copy()))


def small_state(grid, seed, amp=0.25, peak=2.0):
    rng = np.random.default_rng(seed)
    return StateFields(0.0,
                       random_qfield(grid, rng, peak=peak, amplitude=amp),
                       random_solenoidal(grid, rng, peak=peak, amplitude=amp))


def run_records(grid, p, state, dt, t_end, s_exponent=0.5):
    rows = []
    run(state.copy(), p, TimeSetup(dt=dt, t_end=t_end),
        RunSinks(energy=rows.append))
    return attach_identity_residuals(rows)


class TestEnergy:
    def test_zero_state_all_zero(self, grid, part):
        rec = energy(zero_state(grid), ModelParams(), part)
        for name in ("kinetic", "elastic", "bulk", "E", "diss_u", "diss_H",
                     "activity", "hs_phi", "l2_Q", "l4_Q", "l6_Q",
                     "eps_u_gradQ", "eps_grad_u"):
            assert getattr(rec, name) == 0.0

    def test_taylor_green_kinetic_closed_form(self, grid, part):
        state = zero_state(grid)
        state.u = taylor_green(grid, amplitude=1.0)
        rec = energy(state, ModelParams(), part)
        want = 0.5 * (2.0 * np.pi) ** 2 * 0.5
        assert rec.kinetic == pytest.approx(want, rel=1e-12)

    def test_constant_tensor_bulk_closed_form(self, grid, part):
        p = ModelParams(a=-1.0, c=1.0)
        state = zero_state(grid)
        state.q.q11[:] = 0.25
        rec = energy(state, p, part)
        assert rec.bulk == pytest.approx(
            (2.0 * np.pi) ** 2 * -0.05859375, rel=1e-12)
        assert rec.elastic == 0.0
        assert rec.l2_Q == pytest.approx((2 * np.pi) ** 2 * 0.125, rel=1e-12)


class TestEnergyIdentity:
    def test_stationary_zero_state(self, grid, part):
        p = ModelParams()
        recs = []
        for t in (0.0, 0.1, 0.2):
            r = energy(zero_state(grid), p, part)
            r.t = t
            recs.append(r)
        assert energy_identity(*recs) == 0.0

    def test_nonuniform_spacing_rejected(self, grid, part):
        p = ModelParams()
        recs = []
        for t in (0.0, 0.1, 0.3):
            r = energy(zero_state(grid), p, part)
            r.t = t
            recs.append(r)
        with pytest.raises(ValueError):
            energy_identity(*recs)

    def test_residual_small_and_refines(self, grid):
        p = ModelParams(kappa=0.5)
        state = small_state(grid, 1)
        coarse = run_records(grid, p, state, 1e-3, 0.04)
        fine = run_records(grid, p, state, 5e-4, 0.04)
        res_c = max(r.residual for r in coarse[1:-1])
        res_f = max(r.residual for r in fine[1:-1])
        assert res_c <= 1e-4
        assert 3.0 <= res_c / res_f <= 5.0

    def test_mollified_identity_includes_eps_dissipation(self, grid):
        p = ModelParams(kappa=0.5, eps=0.1, mode="mollified")
        state = small_state(grid, 2, amp=0.4)
        recs = run_records(grid, p, state, 1e-3, 0.03)
        assert max(r.residual for r in recs[1:-1]) <= 1e-4
        assert any(r.eps_u_gradQ > 0 for r in recs)

    def test_passive_dissipates(self, grid):
        p = ModelParams(kappa=0.0)
        state = small_state(grid, 3)
        recs = run_records(grid, p, state, 1e-3, 0.03)
        assert all(r.dEdt <= 1e-10 for r in recs[1:-1])


class TestEnergyInequality:
    def test_margins_nonnegative_active(self, grid):
        p = ModelParams(kappa=1.0, mu=1.0)
        recs = run_records(grid, p, small_state(grid, 4), 1e-3, 0.03)
        for r in recs[1:-1]:
            margin, scale = energy_inequality(r, p)
            assert margin >= -1e-6 * scale

    def test_passive_trivially_satisfied(self, grid):
        p = ModelParams(kappa=0.0)
        recs = run_records(grid, p, small_state(grid, 5), 1e-3, 0.02)
        for r in recs[1:-1]:
            margin, _ = energy_inequality(r, p)
            assert margin >= 0.0

    def test_requires_attached_derivative(self, grid, part):
        rec = energy(zero_state(grid), ModelParams(), part)
        with pytest.raises(ValueError):
            energy_inequality(rec, ModelParams())


class TestAprioriMonitor:
    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            apriori_monitor([], ModelParams())

    def test_zero_data(self, grid, part):
        recs = [energy(zero_state(grid), ModelParams(), part)]
        rep = apriori_monitor(recs, ModelParams())
        assert rep["covered"]

    def test_passive_run_flat_envelope(self, grid):
        p = ModelParams(a=0.5, kappa=0.0)
        recs = run_records(grid, p, small_state(grid, 6), 2e-3, 0.2)
        rep = apriori_monitor(recs, p)
        assert rep["covered"]
        assert rep["C2"] <= 1e-6

    def test_active_run_finite_envelope(self, grid):
        p = ModelParams(kappa=1.0)
        recs = run_records(grid, p, small_state(grid, 7), 2e-3, 0.2)
        rep = apriori_monitor(recs, p)
        assert rep["covered"]
        assert np.isfinite(rep["C1"]) and np.isfinite(rep["C2"])


class TestGrowthBound:
    def test_constant_series(self):
        t = np.linspace(0, 5, 50)
        rep = growth_bound_check(t, np.full(50, 2.0))
        assert rep["beta"] == 0.0 and rep["covered"]

    def test_decaying_series(self):
        t = np.linspace(0, 5, 50)
        rep = growth_bound_check(t, 3.0 * np.exp(-t))
        assert rep["beta"] == 0.0 and rep["covered"]

    def test_double_exponential_series_recovers_rate(self):
        t = np.linspace(0, 3, 60)
        phi = np.exp(np.exp(0.8 * t)) - np.e
        rep = growth_bound_check(t, phi)
        assert rep["covered"]
        assert 0.6 <= rep["beta"] <= 1.0
        assert rep["r2"] >= 0.99


class TestTwinDelta:
    def test_identical_states(self, grid):
        a = small_state(grid, 8)
        d = twin_delta(a, a.copy())
        assert d.dQ_l2 == 0.0 and d.dQ_h1 == 0.0 and d.du_l2 == 0.0

    def test_single_point_perturbation_quadrature(self, grid):
        a = small_state(grid, 9)
        b = a.copy()
        b.u.ux[5, 7] += 1e-8
        d = twin_delta(a, b)
        cell = (grid.length / grid.n) ** 2
        assert d.du_l2 == pytest.approx(1e-16 * cell, rel=1e-6)

    def test_symmetry(self, grid):
        a, b = small_state(grid, 10), small_state(grid, 11)
        d1, d2 = twin_delta(a, b), twin_delta(b, a)
        assert d1.dQ_l2 == pytest.approx(d2.dQ_l2, rel=1e-14)
        assert d1.du_l2 == pytest.approx(d2.du_l2, rel=1e-14)

    def test_grid_mismatch(self, grid):
        other = Grid2D(32, 2.0 * np.pi)
        with pytest.raises(ValueError):
            twin_delta(small_state(grid, 12), zero_state(other))


class TestGronwall:
    def test_flat_envelope_is_initial_value(self):
        t = np.linspace(0, 1, 20)
        y = np.exp(-t)
        ok, env = gronwall_envelope(t, y, np.zeros(20), np.zeros(20))
        assert ok
        assert np.allclose(env, y[0])
        ok_bad, _ = gronwall_envelope(t, 1.0 + t, np.zeros(20), np.zeros(20))
        assert not ok_bad

    def test_saturating_exponential(self):
        t = np.linspace(0, 2, 400)
        y = np.exp(t)
        ok, env = gronwall_envelope(t, y, np.ones(400), np.zeros(400),
                                    rtol=1e-6)
        assert ok
        assert np.allclose(env, y, rtol=1e-5)

    def test_source_term(self):
        # Y' = 1, alpha = 0, beta = 1 -> envelope = Y0 + t exactly
        t = np.linspace(0, 1, 50)
        ok, env = gronwall_envelope(t, 0.5 + t, np.zeros(50), np.ones(50),
                                    rtol=1e-9)
        assert ok
        assert np.allclose(env, 0.5 + t)

    def test_validation(self):
        t = np.linspace(0, 1, 5)
        with pytest.raises(ValueError):
            gronwall_envelope(t, np.ones(5), -np.ones(5), np.zeros(5))
        with pytest.raises(ValueError):
            gronwall_envelope(t, np.ones(4), np.zeros(5), np.zeros(5))


class TestInterpolation:
    def test_zero_field_rejected(self, grid):
        with pytest.raises(ValueError):
            interpolation_check(QTensorField(
                grid, np.zeros((grid.n, grid.n)), np.zeros((grid.n, grid.n))))

    def test_single_mode_closed_form(self, grid):
        X, _ = grid.xy
        q = QTensorField(grid, 0.3 * np.cos(2.0 * X),
                         np.zeros((grid.n, grid.n)))
        rep = interpolation_check(q)
        # independent quadrature of the three norms for this single mode
        A, k0, L = 0.3, 2.0, grid.length
        f = A * np.cos(k0 * X)
        gmag = np.sqrt(2.0) * np.abs(A * k0 * np.sin(k0 * X))
        cell = (L / grid.n) ** 2
        lhs = (cell * np.sum(gmag**3)) ** (1 / 3)
        d2 = np.sqrt(cell * np.sum(2.0 * (k0 * k0 * f) ** 2))
        l6 = (cell * np.sum((np.sqrt(2.0) * np.abs(f)) ** 6)) ** (1 / 6)
        assert rep["C"] == pytest.approx(lhs / (np.sqrt(d2) * np.sqrt(l6)),
                                         rel=1e-10)

    def test_scale_invariance(self, grid):
        rng = np.random.default_rng(13)
        q = random_qfield(grid, rng, peak=4.0)
        c1 = interpolation_check(q)["C"]
        q2 = QTensorField(grid, 17.0 * q.q11, 17.0 * q.q12)
        c2 = interpolation_check(q2)["C"]
        assert c1 == pytest.approx(c2, rel=1e-12)

    def test_randomized_constant_bounded(self, grid):
        rng = np.random.default_rng(14)
        worst = 0.0
        for _ in range(100):
            q = random_qfield(grid, rng, peak=rng.uniform(2.0, 12.0))
            worst = max(worst, interpolation_check(q)["C"])
        assert worst <= 10.0
