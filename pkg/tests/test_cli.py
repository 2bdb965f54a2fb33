import json

import numpy as np
import pytest

import hsidenoise as hd
from hsidenoise.cli import main


def run(args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    code = run(["simulate", "--case", 1, "--seed", 0, "--rows", 32, "--cols", 32,
                "--bands", 24, "--rank", 4, "--output", out])
    assert code == 0
    return out


class TestSimulate:
    def test_emits_four_files(self, sim_dir):
        for name in ("noisy.hyc", "clean.hyc", "mask_true.hyc", "truth.json"):
            assert (sim_dir / name).exists()

    def test_rerun_bit_identical(self, sim_dir, tmp_path):
        code = run(["simulate", "--case", 1, "--seed", 0, "--rows", 32, "--cols", 32,
                    "--bands", 24, "--rank", 4, "--output", tmp_path])
        assert code == 0
        for name in ("noisy.hyc", "clean.hyc", "mask_true.hyc", "truth.json"):
            assert (tmp_path / name).read_bytes() == (sim_dir / name).read_bytes()

    def test_unknown_case_exits_config_error(self, tmp_path):
        assert run(["simulate", "--case", 99, "--output", tmp_path]) == 2

    def test_truth_json_has_spec_version(self, sim_dir):
        data = json.loads((sim_dir / "truth.json").read_text())
        assert data["spec_version"] == "1.0"
        assert data["case"] == 1


class TestEstimateNoise:
    def test_writes_outputs(self, sim_dir, tmp_path):
        code = run(["estimate-noise", "--input", sim_dir / "noisy.hyc",
                    "--output", tmp_path])
        assert code == 0
        assert (tmp_path / "mask_est.hyc").exists()
        data = json.loads((tmp_path / "noise.json").read_text())
        assert data["spec_version"] == "1.0"
        assert len(data["sigma_per_band"]) == 24
        assert len(data["bands"]) == 24

    def test_missing_input(self, tmp_path):
        assert run(["estimate-noise", "--input", tmp_path / "nope.hyc",
                    "--output", tmp_path]) == 3

    def test_bad_container(self, tmp_path):
        bad = tmp_path / "bad.hyc"
        bad.write_bytes(b"garbage!" * 4)
        assert run(["estimate-noise", "--input", bad, "--output", tmp_path]) == 3


class TestDenoise:
    def test_end_to_end(self, sim_dir, tmp_path):
        out_cube = tmp_path / "denoised.hyc"
        report = tmp_path / "report.json"
        code = run(["denoise", "--input", sim_dir / "noisy.hyc", "--output", out_cube,
                    "--subspace-dim", 4, "--report", report])
        assert code == 0
        clean = hd.read_container(sim_dir / "clean.hyc")
        noisy = hd.read_container(sim_dir / "noisy.hyc")
        denoised = hd.read_container(out_cube)
        gain = hd.evaluate(clean, denoised).mpsnr - hd.evaluate(clean, noisy).mpsnr
        assert gain > 5.0
        data = json.loads(report.read_text())
        assert data["spec_version"] == "1.0"
        assert data["subspace_dim"] == 4
        assert [s["name"] for s in data["stages"]][0] == "estimate_noise"

    def test_auto_subspace_dim_accepted(self, sim_dir, tmp_path):
        code = run(["denoise", "--input", sim_dir / "noisy.hyc",
                    "--output", tmp_path / "d.hyc", "--subspace-dim", "auto"])
        assert code == 0

    def test_threads_flag_does_not_change_output(self, sim_dir, tmp_path):
        a, b = tmp_path / "a.hyc", tmp_path / "b.hyc"
        assert run(["denoise", "--input", sim_dir / "noisy.hyc", "--output", a,
                    "--subspace-dim", 4]) == 0
        assert run(["denoise", "--input", sim_dir / "noisy.hyc", "--output", b,
                    "--subspace-dim", 4, "--threads", 4]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_bad_subspace_dim(self, sim_dir, tmp_path):
        code = run(["denoise", "--input", sim_dir / "noisy.hyc",
                    "--output", tmp_path / "d.hyc", "--subspace-dim", "-2"])
        assert code == 2

    def test_bad_container_exits_io_error(self, tmp_path):
        bad = tmp_path / "bad.hyc"
        bad.write_bytes(b"HYC9" + b"\x00" * 16)
        assert run(["denoise", "--input", bad, "--output", tmp_path / "d.hyc"]) == 3

    def test_config_file_with_flag_override(self, sim_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"subspace-dim": 4, "denoiser": "identity"}))
        out = tmp_path / "d.hyc"
        report = tmp_path / "r.json"
        code = run(["denoise", "--input", sim_dir / "noisy.hyc", "--output", out,
                    "--config", cfg, "--denoiser", "dct", "--report", report])
        assert code == 0
        assert json.loads(report.read_text())["subspace_dim"] == 4


class TestEvaluate:
    def test_identical_files(self, sim_dir, tmp_path):
        report = tmp_path / "m.json"
        code = run(["evaluate", "--ref", sim_dir / "clean.hyc",
                    "--test", sim_dir / "clean.hyc", "--report", report])
        assert code == 0
        data = json.loads(report.read_text())
        assert data["mssim"] == pytest.approx(1.0, abs=1e-12)
        assert data["mpsnr"] == "inf"
        assert (tmp_path / "m.csv").exists()

    def test_missing_file(self, sim_dir, tmp_path):
        assert run(["evaluate", "--ref", sim_dir / "clean.hyc",
                    "--test", tmp_path / "nope.hyc"]) == 3

    def test_mask_args_add_prf(self, sim_dir, tmp_path):
        report = tmp_path / "m.json"
        code = run(["evaluate", "--ref", sim_dir / "clean.hyc",
                    "--test", sim_dir / "noisy.hyc",
                    "--est-mask", sim_dir / "mask_true.hyc",
                    "--true-mask", sim_dir / "mask_true.hyc",
                    "--report", report])
        assert code == 0
        data = json.loads(report.read_text())
        assert "mask_f1" in data


def test_console_script_help():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "hsidenoise.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "simulate" in out.stdout
