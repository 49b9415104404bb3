import filecmp
import os

import numpy as np
import pytest

from alcs.cli import main
from alcs.config import ConfigError, load_config, parse_config
from alcs.experiments import (
    execute_run,
    execute_sweep,
    execute_twin,
    make_initial,
    run_check_suite,
)
from alcs.snapshots import (
    SnapshotError,
    read_header,
    read_snapshot,
    write_snapshot,
)
from alcs.spectral import divergence, integrate


BASE_KEYS = {
    "N": "32",
    "dt": "2e-3",
    "t_end": "0.02",
    "amplitude": "0.2",
    "seed": "777",
}


def cfg_text(out, **overrides):
    keys = dict(BASE_KEYS, out_dir=str(out))
    keys.update({k: str(v) for k, v in overrides.items()})
    return "".join(f"{k} = {v}\n" for k, v in keys.items())


def write_cfg(tmp_path, name, body):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return str(path)


class TestConfigParsing:
    def test_minimal_with_defaults(self):
        cfg = parse_config("N = 64\n")
        assert cfg.N == 64
        assert cfg.mu == 1.0
        assert cfg.mode == "direct"

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# intro\n\nN = 16  # inline\n")
        assert cfg.N == 16

    def test_constraint_violation_named_with_line(self):
        with pytest.raises(ConfigError) as err:
            parse_config("N = 64\nmu = 0\n")
        assert any("line 2" in p and "mu must be > 0" in p
                   for p in err.value.problems)

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as err:
            parse_config("nu = 1\n")
        assert any("unknown key" in p for p in err.value.problems)

    def test_type_mismatch(self):
        with pytest.raises(ConfigError) as err:
            parse_config("N = sixty-four\n")
        assert any("expects int" in p for p in err.value.problems)

    def test_all_problems_collected(self):
        with pytest.raises(ConfigError) as err:
            parse_config("mu = 0\nGamma = -1\nc = 0\n")
        assert len(err.value.problems) == 3

    def test_friedrichs_range_check_names_range(self):
        with pytest.raises(ConfigError) as err:
            parse_config("N = 64\nmode = friedrichs\nn_trunc = 9\n")
        assert any("1..4" in p for p in err.value.problems)

    def test_lambda_keyword_maps_to_lam(self):
        assert parse_config("lambda = 0.7\n").lam == 0.7

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("N = 48\n")


class TestMakeInitial:
    def test_uniform_director_exact(self):
        cfg = parse_config("ic = uniform_director\ndirector_angle = 0\n"
                           "s_order = 0.5\n")
        state = make_initial(cfg)
        assert np.abs(state.q.q11 - 0.25).max() <= 1e-13
        assert np.abs(state.q.q12).max() <= 1e-13
        assert np.abs(state.u.ux).max() == 0.0

    def test_seed_determinism(self):
        cfg = parse_config("ic = random_spectrum\nseed = 99\n")
        a, b = make_initial(cfg), make_initial(cfg)
        assert np.array_equal(a.q.q11, b.q.q11)
        assert np.array_equal(a.u.ux, b.u.ux)

    def test_amplitude_scales_kinetic_energy(self):
        base = parse_config("ic = random_spectrum\namplitude = 0.1\n")
        quad = parse_config("ic = random_spectrum\namplitude = 0.2\n")
        g = base.grid()
        e1 = integrate(g, make_initial(base).u.ux**2
                       + make_initial(base).u.uy**2)
        e2 = integrate(g, make_initial(quad).u.ux**2
                       + make_initial(quad).u.uy**2)
        assert e2 == pytest.approx(4.0 * e1, rel=1e-12)

    def test_velocity_projected(self):
        cfg = parse_config("ic = random_spectrum\namplitude = 0.5\n")
        state = make_initial(cfg)
        g = state.q.grid
        div = divergence(g, state.u.ux, state.u.uy)
        assert np.abs(div).max() <= 1e-11


class TestSnapshots:
    def test_roundtrip_bit_exact(self, tmp_path):
        cfg = parse_config("N = 16\nic = random_spectrum\n")
        state = make_initial(cfg)
        state.t = 0.625
        path = tmp_path / "s.snap"
        write_snapshot(path, state)
        back = read_snapshot(path)
        assert back.t == 0.625
        assert np.array_equal(back.q.q11, state.q.q11)
        assert np.array_equal(back.u.uy, state.u.uy)

    def test_header(self, tmp_path):
        cfg = parse_config("N = 16\n")
        state = make_initial(cfg)
        path = tmp_path / "s.snap"
        write_snapshot(path, state)
        h = read_header(path)
        assert h["N"] == 16 and h["d"] == 2 and h["nfields"] == 4

    def test_truncation_reports_sizes(self, tmp_path):
        cfg = parse_config("N = 16\n")
        path = tmp_path / "s.snap"
        write_snapshot(path, make_initial(cfg))
        blob = path.read_bytes()
        path.write_bytes(blob[:-100])
        with pytest.raises(SnapshotError) as err:
            read_snapshot(path)
        assert "expected" in str(err.value) and "got" in str(err.value)

    def test_bad_magic_rejected(self, tmp_path):
        cfg = parse_config("N = 16\n")
        path = tmp_path / "s.snap"
        write_snapshot(path, make_initial(cfg))
        blob = bytearray(path.read_bytes())
        blob[:4] = b"SCLA"
        path.write_bytes(bytes(blob))
        with pytest.raises(SnapshotError) as err:
            read_snapshot(path)
        assert "magic" in str(err.value)


class TestRunCommand:
    def test_zero_horizon_single_row(self, tmp_path):
        cfg_path = write_cfg(tmp_path, "r.cfg",
                             cfg_text(tmp_path / "o", t_end=0))
        code = main(["run", cfg_path])
        assert code == 0
        lines = (tmp_path / "o" / "energy.csv").read_text().splitlines()
        assert lines[0].startswith("t,kinetic,elastic,bulk,E,diss_u,diss_H,"
                                   "activity,residual,hs_phi,l2_Q,l4_Q,"
                                   "l6_Q,eps_u_gradQ,eps_grad_u")
        assert len(lines) == 2

    def test_determinism_byte_identical(self, tmp_path):
        a = write_cfg(tmp_path, "a.cfg", cfg_text(tmp_path / "a"))
        b = write_cfg(tmp_path, "b.cfg", cfg_text(tmp_path / "b"))
        assert main(["run", a]) == 0
        assert main(["run", b]) == 0
        assert filecmp.cmp(tmp_path / "a" / "energy.csv",
                           tmp_path / "b" / "energy.csv", shallow=False)

    def test_passive_energy_monotone(self, tmp_path):
        body = cfg_text(tmp_path / "o", kappa=0, a=0.5, t_end=0.05)
        cfg = parse_config(body)
        code, records = execute_run(cfg, quiet=True)
        assert code == 0
        energies = [r.E for r in records]
        assert all(b <= a + 1e-12 * abs(a)
                   for a, b in zip(energies, energies[1:]))

    def test_blowup_exit_two_with_partial_csv(self, tmp_path):
        body = cfg_text(tmp_path / "o", dt=0.5, t_end=5, amplitude=40, peak_wavenumber=6)
        cfg_path = write_cfg(tmp_path, "boom.cfg", body)
        assert main(["run", cfg_path]) == 2
        assert (tmp_path / "o" / "energy.csv").exists()

    def test_snapshots_and_checkpoint(self, tmp_path):
        body = cfg_text(tmp_path / "o", snapshot_every=5)
        cfg_path = write_cfg(tmp_path, "r.cfg", body)
        assert main(["run", cfg_path]) == 0
        snaps = sorted((tmp_path / "o").glob("snapshot_*.snap"))
        assert len(snaps) == 3  # steps 0, 5, 10
        assert (tmp_path / "o" / "checkpoint.snap").exists()
        assert (tmp_path / "o" / "config_echo.cfg").exists()

    def test_restart_reproduces_run(self, tmp_path):
        full = parse_config(cfg_text(tmp_path / "full", t_end=0.04))
        code, rec_full = execute_run(full, quiet=True)
        assert code == 0
        half = parse_config(cfg_text(tmp_path / "half", t_end=0.02))
        assert execute_run(half, quiet=True)[0] == 0
        resume_body = cfg_text(tmp_path / "resume", t_end=0.04, ic="file",
                               ic_file=tmp_path / 'half' / 'checkpoint.snap')
        resume = parse_config(resume_body)
        code, rec_resume = execute_run(resume, quiet=True)
        assert code == 0
        tail = {round(r.t, 9): r.E for r in rec_resume}
        for r in rec_full:
            key = round(r.t, 9)
            if key in tail and key >= 0.02:
                assert abs(tail[key] - r.E) <= 1e-12 * max(abs(r.E), 1.0)

    def test_out_dir_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ALCS_OUT_DIR", str(tmp_path / "env_out"))
        cfg = parse_config(cfg_text(tmp_path / "ignored", t_end=0))
        code, _ = execute_run(cfg, quiet=True)
        assert code == 0
        assert (tmp_path / "env_out" / "energy.csv").exists()


class TestCheckCommand:
    def test_default_suite_passes(self, tmp_path):
        cfg = parse_config("N = 32\n")
        results = run_check_suite(cfg)
        failed = [r for r in results if not r[3]]
        assert failed == []

    def test_minimal_grid_passes(self):
        cfg = parse_config("N = 8\ndt = 1e-3\n")
        results = run_check_suite(cfg)
        failed = [r for r in results if not r[3]]
        assert failed == []

    def test_injected_sign_flip_caught(self):
        cfg = parse_config("N = 16\n")
        results = run_check_suite(cfg, flip_stress_sign=True)
        failing = {r[0] for r in results if not r[3]}
        assert "rotation_stress_cancellation" in failing

    def test_check_toggles_select_suites(self):
        cfg = parse_config("N = 16\nchecks = leray\n")
        names = {r[0] for r in run_check_suite(cfg)}
        assert names == {"leray_divergence", "leray_idempotent",
                         "leray_annihilates_gradients"}


class TestTwinCommand:
    def test_identical_configs_zero_delta(self, tmp_path):
        body = cfg_text(tmp_path / "tw")
        cfg_a = parse_config(body)
        cfg_b = parse_config(body)
        code, report = execute_twin(cfg_a, cfg_b, out_dir=tmp_path / "tw",
                                    quiet=True)
        assert code == 0
        assert report["identical"]
        rows = (tmp_path / "tw" / "twin.csv").read_text().splitlines()
        assert rows[0] == "t,dQ_l2,dQ_h1,du_l2"
        for row in rows[1:]:
            vals = [float(v) for v in row.split(",")[1:]]
            assert all(v <= 1e-12 for v in vals)

    def test_grid_mismatch_exit_four(self, tmp_path):
        cfg_a = parse_config("N = 32\n")
        cfg_b = parse_config("N = 64\n")
        code, _ = execute_twin(cfg_a, cfg_b, out_dir=tmp_path, quiet=True)
        assert code == 4

    def test_eps_refinement_deltas_shrink(self, tmp_path):
        # mollifier-scale twins: runs converge to each other as eps drops
        def moll(eps):
            return parse_config(cfg_text(
                tmp_path / "eps", t_end=0.04, mode="mollified", eps=eps,
                peak_wavenumber=3))

        _, wide = execute_twin(moll("0.2"), moll("0.05"),
                               out_dir=tmp_path / "w", quiet=True)
        _, tight = execute_twin(moll("0.1"), moll("0.05"),
                                out_dir=tmp_path / "t", quiet=True)
        assert tight["final_delta"] < wide["final_delta"]

    def test_dt_refinement_order_two(self, tmp_path):
        def make_base(dt):
            return cfg_text(tmp_path / "ref", t_end=0.04, dt=dt)

        fine = parse_config(make_base("1.25e-4"))
        dts, finals = [], []
        for dt in ("2e-3", "1e-3", "5e-4"):
            coarse = parse_config(make_base(dt))
            code, report = execute_twin(
                coarse, fine, out_dir=tmp_path / f"ref{dt}", quiet=True)
            assert code == 0 and report["covered"]
            dts.append(float(dt))
            finals.append(np.sqrt(report["final_delta"]))
        slope = np.polyfit(np.log(dts), np.log(finals), 1)[0]
        assert 1.7 <= slope <= 2.3


class TestSweepCommand:
    def test_single_value_reduces_to_run(self, tmp_path):
        cfg = parse_config(cfg_text(tmp_path / "sw", kappa=0))
        code, rows = execute_sweep(cfg, "kappa", [0.0],
                                   out_dir=tmp_path / "sw", quiet=True)
        assert code == 0
        assert (tmp_path / "sw" / "kappa_0" / "energy.csv").exists()
        assert (tmp_path / "sw" / "sweep_summary.csv").exists()
        assert rows[0]["max_h1_Q"] > 0

    def test_child_failure_recorded_and_continues(self, tmp_path):
        body = cfg_text(tmp_path / "sw2", dt=0.5, t_end=5, peak_wavenumber=6)
        cfg = parse_config(body)
        # huge amplitude blows up, tiny one survives
        from dataclasses import replace
        code, rows = execute_sweep(replace(cfg, amplitude=40.0), "kappa",
                                   [0.5], out_dir=tmp_path / "sw2",
                                   quiet=True)
        assert code == 2
        assert rows[0]["exit"] == 2


class TestSnapshotCli:
    def test_info_and_lp_norm(self, tmp_path, capsys):
        cfg = parse_config("N = 16\n")
        path = tmp_path / "s.snap"
        write_snapshot(path, make_initial(cfg))
        assert main(["info", str(path)]) == 0
        out = capsys.readouterr().out
        assert "N = 16" in out
        assert main(["lp-norm", str(path), "--s", "0.5"]) == 0
        out = capsys.readouterr().out
        assert "phi =" in out
