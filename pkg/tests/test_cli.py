import json

import numpy as np
import pytest

from oscnet.cli import EXIT_CONFIG, EXIT_SATURATED, EXIT_UNSTABLE, bundled_config_path, main


def run(args):
    return main(args)


@pytest.fixture()
def outdir(tmp_path):
    return tmp_path / "out"


class TestValidate:
    def test_network1_report(self, outdir, capsys):
        assert run(["validate", "--config", "network1.cfg", "--out", str(outdir)]) == 0
        report = (outdir / "validate.txt").read_text()
        assert "nodes = 16" in report
        assert "stable = true" in report
        # 16 positive environment eigenfrequencies
        freq_line = report.splitlines()[6]
        freqs = [float(x) for x in freq_line.split(",")]
        assert len(freqs) == 16
        assert all(f > 0 for f in freqs)

    def test_unstable_config_exit_code(self, tmp_path, outdir, capsys):
        cfg = {
            "network": {"kind": "linear-periodic", "n": 4, "pattern": [0.1], "omega0": 0.25},
            "probe": {"site": 1, "k": 0.5, "omega_s": 0.1},
            "protocol": "validate",
        }
        p = tmp_path / "bad.cfg"
        p.write_text(json.dumps(cfg))
        assert run(["validate", "--config", str(p), "--out", str(outdir)]) == EXIT_UNSTABLE
        assert "eigenvalue" in capsys.readouterr().err

    def test_network4_connected_and_100_edges(self, outdir):
        assert run(["validate", "--config", "network4.cfg", "--out", str(outdir)]) == 0
        report = (outdir / "validate.txt").read_text()
        assert "edges = 100" in report
        assert "connected = true" in report

    def test_missing_config_is_config_error(self, outdir, capsys):
        assert run(["validate", "--config", "nope.cfg", "--out", str(outdir)]) == EXIT_CONFIG


class TestSpectral:
    def test_network1_both_methods_csv(self, outdir):
        assert (
            run(
                [
                    "spectral",
                    "--config",
                    "network1.cfg",
                    "--method",
                    "both",
                    "--out",
                    str(outdir),
                ]
            )
            == 0
        )
        lines = (outdir / "spectral.csv").read_text().splitlines()
        assert lines[0] == "omega_s,J_analytic,J_probe"
        assert len(lines) == 121  # 120 sweep points
        assert (outdir / "crosspath.txt").exists()
        manifest = json.loads((outdir / "manifest.json").read_text())
        assert manifest["config"]["protocol"] == "spectral"
        assert manifest["overrides"] == {"method": "both", "out_dir": str(outdir)}

    def test_seeded_rerun_byte_identical(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        args = [
            "spectral", "--config", "network1.cfg", "--method", "probe",
            "--points", "8", "--samples", "500", "--reps", "4", "--seed", "7",
        ]
        assert run(args + ["--out", str(out1)]) == 0
        assert run(args + ["--out", str(out2)]) == 0
        assert (out1 / "spectral.csv").read_bytes() == (out2 / "spectral.csv").read_bytes()

    def test_probe_saturation_exit_code(self, tmp_path, capsys):
        graph = {
            "nodes": 1,
            "omega0": 0.25,
            "edges": [],
            "probe": {"site": 1, "k": 0.001, "omega_s": 0.25},
        }
        (tmp_path / "one.json").write_text(json.dumps(graph))
        cfg = {
            "network": {"file": "one.json"},
            "probe": {"site": 1, "k": 0.001, "omega_s": 0.25},
            "protocol": "spectral",
            "method": "probe",
            "t_max": float(np.pi / 2 / (0.001 / 0.5)),  # full resonant swap
            "temperature": 1.0,
        }
        p = tmp_path / "sat.cfg"
        p.write_text(json.dumps(cfg))
        code = run(["spectral", "--config", str(p), "--out", str(tmp_path / "o")])
        assert code == EXIT_SATURATED
        assert "saturation" in capsys.readouterr().err


class TestQnm:
    def test_network1_table_ordering(self, outdir, capsys):
        assert (
            run(
                [
                    "qnm", "--config", "network1.cfg", "--omega-s", "0.58,0.7",
                    "--out", str(outdir),
                ]
            )
            == 0
        )
        vals = {}
        for tag in ("0.58", "0.7"):
            text = (outdir / f"witness_w{tag}.txt").read_text()
            vals[tag] = float(text.splitlines()[1].split("=")[1])
            trace_lines = (outdir / f"qnm_w{tag}.csv").read_text().splitlines()
            assert trace_lines[0] == "t,F_raw,F_smooth"
            assert len(trace_lines) == 252  # 251 time points
        assert vals["0.58"] > vals["0.7"]

    def test_network4_table_ordering(self, outdir):
        assert (
            run(
                [
                    "qnm", "--config", "network4.cfg", "--omega-s", "0.4,0.75,0.9",
                    "--out", str(outdir),
                ]
            )
            == 0
        )
        vals = {}
        for tag in ("0.4", "0.75", "0.9"):
            text = (outdir / f"witness_w{tag}.txt").read_text()
            vals[tag] = float(text.splitlines()[1].split("=")[1])
        assert vals["0.75"] > vals["0.4"]
        assert vals["0.75"] > vals["0.9"]

    def test_zero_coupling_gives_zero_witness(self, tmp_path, outdir):
        cfg = {
            "network": {"kind": "linear-periodic", "n": 8, "pattern": [0.1], "omega0": 0.25},
            "probe": {"site": 1, "k": 0.0, "omega_s": 0.58},
            "protocol": "qnm",
        }
        p = tmp_path / "k0.cfg"
        p.write_text(json.dumps(cfg))
        assert run(["qnm", "--config", str(p), "--out", str(outdir)]) == 0
        text = (outdir / "witness_w0.58.txt").read_text()
        assert float(text.splitlines()[1].split("=")[1]) < 1e-10


class TestMasks:
    def test_time_zero_unit_mask(self, tmp_path, outdir):
        assert (
            run(
                [
                    "masks", "--config", "network1.cfg", "--omega-s", "0.58",
                    "--t-max", "0", "--out", str(outdir),
                ]
            )
            == 0
        )
        rows = np.loadtxt(outdir / "mask_q_w0.58_t0.csv", delimiter=",", skiprows=1)
        assert np.isclose(abs(rows[0, 1]), 1.0)
        assert np.allclose(rows[1:, 1:], 0.0, atol=1e-12)

    def test_mask_normalization(self, outdir):
        assert run(["masks", "--config", "network1.cfg", "--out", str(outdir)]) == 0
        q = np.loadtxt(outdir / "mask_q_w0.58_t150.csv", delimiter=",", skiprows=1)
        p = np.loadtxt(outdir / "mask_p_w0.58_t150.csv", delimiter=",", skiprows=1)
        for rows in (q, p):
            assert np.isclose(np.linalg.norm(rows[:, 1:]), 1.0, atol=1e-10)

    def test_golden_regression(self, outdir, request):
        assert run(["masks", "--config", "network1.cfg", "--out", str(outdir)]) == 0
        got = np.loadtxt(outdir / "mask_q_w0.58_t150.csv", delimiter=",", skiprows=1)
        golden = np.loadtxt(
            request.path.parent / "data" / "mask_net1_w0.58_t150.csv", delimiter=","
        )
        assert np.allclose(got, golden, atol=1e-12)


class TestEvolve:
    def test_matrix_dump_header_and_shape(self, outdir):
        assert (
            run(
                [
                    "evolve", "--config", "network1.cfg", "--omega-s", "0.58",
                    "--t-max", "150", "--out", str(outdir),
                ]
            )
            == 0
        )
        path = outdir / "evolution_w0.58_t150.txt"
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# dim=34 ordering=q_S,")
        mat = np.loadtxt(path)
        assert mat.shape == (34, 34)
        from oscnet.symplectic import is_symplectic

        assert is_symplectic(mat, 1e-9)[0]


def test_bundled_configs_exist_and_parse():
    for i in range(1, 6):
        path = bundled_config_path(f"network{i}.cfg")
        assert path.exists()
        cfg = json.loads(path.read_text())
        assert "network" in cfg and "probe" in cfg


def test_outdir_env_variable(tmp_path, monkeypatch):
    target = tmp_path / "from-env"
    monkeypatch.setenv("OSCNET_OUT", str(target))
    assert run(["validate", "--config", "network1.cfg"]) == 0
    assert (target / "validate.txt").exists()
