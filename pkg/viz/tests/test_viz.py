import struct

import numpy as np
import pytest

from alcs_viz.formats import FormatError, read_csv_table, read_snapshot
from alcs_viz.nematic import director_angle, eigensolve_order, \
    order_parameter
from alcs_viz.render import PlotSpec, render

HEADER = struct.Struct("<4sIIIddI")


def write_fixture_snapshot(path, n=16, length=2 * np.pi, t=0.5,
                           fields=None):
    """Local writer for the published snapshot layout (test fixture)."""
    if fields is None:
        x = np.arange(n) * (length / n)
        X, Y = np.meshgrid(x, x, indexing="ij")
        fields = {
            "q11": np.full((n, n), 0.25),
            "q12": np.zeros((n, n)),
            "ux": 0.1 * np.sin(Y),
            "uy": 0.1 * np.sin(X),
        }
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(b"ALCS", 1, 2, n, length, t, len(fields)))
        for name, data in fields.items():
            fh.write(name.encode().ljust(16, b"\0"))
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def write_fixture_energy(path, rows=20):
    cols = ("t,kinetic,elastic,bulk,E,diss_u,diss_H,activity,residual,"
            "hs_phi,l2_Q,l4_Q,l6_Q,eps_u_gradQ,eps_grad_u")
    t = np.linspace(0, 1, rows)
    with open(path, "w") as fh:
        fh.write(cols + "\n")
        for ti in t:
            e = np.exp(-ti)
            fh.write(",".join(repr(float(v)) for v in
                              (ti, 0.4 * e, 0.3 * e, 0.3 * e, e, 0.1 * e,
                               0.2 * e, 0.0, 1e-6, 2 * e, e, e * e,
                               e**3, 0.0, 0.0)) + "\n")


class TestFormats:
    def test_snapshot_roundtrip(self, tmp_path):
        path = tmp_path / "s.snap"
        write_fixture_snapshot(path)
        snap = read_snapshot(path)
        assert snap.n == 16
        assert snap.t == 0.5
        assert np.all(snap["q11"] == 0.25)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "s.snap"
        write_fixture_snapshot(path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"XXXX"
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError):
            read_snapshot(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "s.snap"
        write_fixture_snapshot(path)
        path.write_bytes(path.read_bytes()[:-13])
        with pytest.raises(FormatError, match="expected"):
            read_snapshot(path)

    def test_csv_table(self, tmp_path):
        path = tmp_path / "energy.csv"
        write_fixture_energy(path)
        table = read_csv_table(path)
        assert len(table["t"]) == 20
        assert table["E"][0] == pytest.approx(1.0)

    def test_csv_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1.0,2.0\n3.0\n")
        with pytest.raises(FormatError, match="row 3"):
            read_csv_table(path)


class TestNematicExtraction:
    def test_uniform_director_values(self):
        q11 = np.full((8, 8), 0.25)
        q12 = np.zeros((8, 8))
        assert np.allclose(order_parameter(q11, q12), 0.5)
        assert np.allclose(director_angle(q11, q12), 0.0)

    def test_matches_eigensolve(self):
        rng = np.random.default_rng(0)
        q11 = rng.uniform(-1, 1, (64, 64))
        q12 = rng.uniform(-1, 1, (64, 64))
        fast = order_parameter(q11, q12)
        eig = eigensolve_order(q11, q12)
        assert np.abs(fast - eig).max() <= 1e-12

    def test_angle_is_leading_eigenvector(self):
        rng = np.random.default_rng(1)
        q11 = rng.uniform(-1, 1, 100)
        q12 = rng.uniform(-1, 1, 100)
        theta = director_angle(q11, q12)
        n1, n2 = np.cos(theta), np.sin(theta)
        lam = 0.5 * order_parameter(q11, q12)
        # Q n = lambda n for the positive eigenvalue
        r1 = q11 * n1 + q12 * n2 - lam * n1
        r2 = q12 * n1 - q11 * n2 - lam * n2
        assert np.abs(r1).max() <= 1e-12
        assert np.abs(r2).max() <= 1e-12


class TestRender:
    @pytest.mark.parametrize("kind", ["order", "director", "velocity"])
    def test_snapshot_kinds(self, tmp_path, kind):
        snap = tmp_path / "s.snap"
        write_fixture_snapshot(snap)
        spec = PlotSpec(kind=kind, input_path=str(snap),
                        output_path=str(tmp_path / f"{kind}.png"))
        out = render(spec)
        assert (tmp_path / f"{kind}.png").exists()
        assert out == str(tmp_path / f"{kind}.png")

    def test_render_does_not_modify_input(self, tmp_path):
        snap = tmp_path / "s.snap"
        write_fixture_snapshot(snap)
        before = snap.read_bytes()
        render(PlotSpec(kind="order", input_path=str(snap),
                        output_path=str(tmp_path / "o.png")))
        assert snap.read_bytes() == before

    def test_default_output_alongside_input(self, tmp_path):
        snap = tmp_path / "abc.snap"
        write_fixture_snapshot(snap)
        out = render(PlotSpec(kind="order", input_path=str(snap)))
        assert out == str(tmp_path / "abc_order.png")

    def test_energy_and_twin_curves(self, tmp_path):
        energy = tmp_path / "energy.csv"
        write_fixture_energy(energy)
        render(PlotSpec(kind="energy", input_path=str(energy),
                        output_path=str(tmp_path / "e.png")))
        twin = tmp_path / "twin.csv"
        t = np.linspace(0, 1, 10)
        with open(twin, "w") as fh:
            fh.write("t,dQ_l2,dQ_h1,du_l2\n")
            for ti in t:
                fh.write(f"{float(ti)!r},{float(1e-8 * ti)!r},{float(2e-8 * ti)!r},"
                         f"{float(3e-9 * ti)!r}\n")
        render(PlotSpec(kind="twin", input_path=str(twin),
                        output_path=str(tmp_path / "tw.png")))
        assert (tmp_path / "e.png").exists()
        assert (tmp_path / "tw.png").exists()

    def test_degenerate_tensor_marked(self, tmp_path):
        n = 8
        zero = np.zeros((n, n))
        snap = tmp_path / "z.snap"
        write_fixture_snapshot(snap, n=n, fields={
            "q11": zero, "q12": zero, "ux": zero, "uy": zero})
        out = render(PlotSpec(kind="director", input_path=str(snap),
                              output_path=str(tmp_path / "z.png")))
        assert (tmp_path / "z.png").exists()

    def test_missing_field_rejected(self, tmp_path):
        n = 8
        snap = tmp_path / "partial.snap"
        write_fixture_snapshot(snap, n=n, fields={
            "q11": np.zeros((n, n)), "q12": np.zeros((n, n))})
        with pytest.raises(FormatError, match="lacks"):
            render(PlotSpec(kind="velocity", input_path=str(snap)))

    def test_identical_inputs_identical_dimensions(self, tmp_path):
        from PIL import Image

        snap = tmp_path / "s.snap"
        write_fixture_snapshot(snap)
        sizes = []
        for name in ("a.png", "b.png"):
            render(PlotSpec(kind="order", input_path=str(snap),
                            output_path=str(tmp_path / name)))
            with Image.open(tmp_path / name) as im:
                sizes.append(im.size)
        assert sizes[0] == sizes[1]


class TestPrimaryInterop:
    """End-to-end against files the solver actually emits."""

    def test_reads_every_primary_format(self, tmp_path):
        alcs = pytest.importorskip("alcs")
        from alcs.config import parse_config
        from alcs.experiments import execute_run, execute_twin

        cfg = parse_config(
            f"N = 32\ndt = 2e-3\nt_end = 0.02\nsnapshot_every = 5\n"
            f"ic = uniform_director\ndirector_angle = 0.3\n"
            f"s_order = 0.5\nout_dir = {tmp_path / 'run'}\n")
        code, _ = execute_run(cfg, quiet=True)
        assert code == 0
        code, _ = execute_twin(cfg, cfg, out_dir=tmp_path / "tw", quiet=True)
        assert code == 0

        snaps = sorted((tmp_path / "run").glob("snapshot_*.snap"))
        for kind, src in (("order", snaps[0]),
                          ("director", snaps[-1]),
                          ("velocity", tmp_path / "run" / "checkpoint.snap"),
                          ("energy", tmp_path / "run" / "energy.csv"),
                          ("twin", tmp_path / "tw" / "twin.csv")):
            out = render(PlotSpec(kind=kind, input_path=str(src),
                                  output_path=str(tmp_path / f"{kind}.png")))
            assert (tmp_path / f"{kind}.png").exists(), out

    def test_uniform_director_snapshot_constant_panel(self, tmp_path):
        pytest.importorskip("alcs")
        from alcs.config import parse_config
        from alcs.experiments import make_initial
        from alcs.snapshots import write_snapshot

        cfg = parse_config("N = 32\nic = uniform_director\n"
                           "director_angle = 0\ns_order = 0.5\n")
        state = make_initial(cfg)
        path = tmp_path / "uniform.snap"
        write_snapshot(path, state)
        snap = read_snapshot(path)
        s = order_parameter(snap["q11"], snap["q12"])
        assert np.abs(s - 0.5).max() <= 1e-12
        assert np.abs(s - eigensolve_order(snap["q11"],
                                           snap["q12"])).max() <= 1e-12
        out = render(PlotSpec(kind="director", input_path=str(path),
                              output_path=str(tmp_path / "u.png")))
        assert (tmp_path / "u.png").exists()
