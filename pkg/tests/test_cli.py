import json
import subprocess
import sys

import numpy as np
import pytest

CURVE_SPEC = '{"f": [0, -1, 0, 1]}\n'


def run_cli(args, **kwargs):
    return subprocess.run([sys.executable, "-m", "thetakernels.cli"] + args,
                          capture_output=True, text=True, **kwargs)


@pytest.fixture()
def curve_file(tmp_path):
    path = tmp_path / "curve.json"
    path.write_text(CURVE_SPEC)
    return str(path)


class TestPeriodsCommand:
    def test_square_lattice_report(self, curve_file):
        res = run_cli(["periods", "--curve", curve_file])
        assert res.returncode == 0
        rep = json.loads(res.stdout)
        om = rep["Omega"][0][0]
        assert abs(om[0]) < 1e-9 and abs(om[1] - 1.0) < 1e-9
        assert rep["symmetry_residual"] <= 1e-9
        assert rep["min_im_eigenvalue"] > 0

    def test_malformed_spec(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        res = run_cli(["periods", "--curve", str(bad)])
        assert res.returncode == 2
        assert res.stderr.strip()

    def test_missing_curve(self):
        res = run_cli(["periods"])
        assert res.returncode == 2


class TestVerifyCommand:
    def test_unknown_suite(self):
        res = run_cli(["verify", "nope"])
        assert res.returncode == 2

    def test_jets_all_exact(self):
        res = run_cli(["verify", "jets"])
        assert res.returncode == 0
        rep = json.loads(res.stdout)
        assert rep["pass"]
        assert all(c["residual"] == 0.0 for c in rep["checks"])

    def test_fay_suite(self, curve_file):
        res = run_cli(["verify", "fay", "--curve", curve_file])
        assert res.returncode == 0
        rep = json.loads(res.stdout)
        assert rep["checks"][0]["residual"] <= 1e-8


class TestProbeCommand:
    def test_deterministic_csv(self, curve_file, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        for out in (out1, out2):
            res = run_cli(["probe", "--curve", curve_file, "--samples", "25",
                           "--seed", "3", "--format", "csv",
                           "--out", str(out)])
            assert res.returncode == 0
        assert out1.read_bytes() == out2.read_bytes()
        header = out1.read_text().splitlines()[0]
        assert header.startswith("e_re_0,e_im_0")

    def test_json_report(self, curve_file):
        res = run_cli(["probe", "--curve", curve_file, "--samples", "10",
                       "--seed", "0"])
        assert res.returncode == 0
        rep = json.loads(res.stdout)
        assert rep["n_samples"] == 10
        assert rep["n_nontrivial"] == 0

    def test_single_sample_rejected(self, curve_file):
        res = run_cli(["probe", "--curve", curve_file, "--samples", "1"])
        assert res.returncode == 2


class TestEvalCommand:
    def test_theta_value(self):
        res = run_cli(["eval", "theta", "--omega", "[[[0,1]]]", "--z", "0"])
        assert res.returncode == 0
        rep = json.loads(res.stdout)
        assert abs(rep["value"][0] - 1.08643481121331) < 1e-11
        assert abs(rep["value"][1]) < 1e-12

    def test_szego_on_divisor_exits_4(self, curve_file):
        res = run_cli(["eval", "szego", "--curve", curve_file,
                       "--e", "0.5+0.5j", "--x1", "2.0", "--x2", "-2.0"])
        assert res.returncode == 4

    def test_bergman_swap_symmetry(self, curve_file):
        a = run_cli(["eval", "bergman", "--curve", curve_file,
                     "--x1", "2.0", "--x2", "-2.0"])
        b = run_cli(["eval", "bergman", "--curve", curve_file,
                     "--x1", "-2.0", "--x2", "2.0"])
        assert a.returncode == 0 and b.returncode == 0
        va = json.loads(a.stdout)["value"]
        vb = json.loads(b.stdout)["value"]
        assert np.allclose(va, vb, rtol=1e-9)

    def test_wirtinger_eval(self, curve_file):
        res = run_cli(["eval", "wirtinger", "--curve", curve_file,
                       "--e", "0.31+0.17j", "--x1", "2.0"])
        assert res.returncode == 0
        rep = json.loads(res.stdout)
        assert abs(complex(*rep["value"])
                   - (0.40809817348537 + 0.17383322084278j)) < 1e-8
