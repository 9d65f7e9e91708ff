import json
import math

import numpy as np
import pytest

from fsabr.cli import main


@pytest.fixture
def params_file(tmp_path):
    path = tmp_path / "desk.params"
    path.write_text(
        "# desk parameters\n"
        "x0 = 0.0\n"
        "y0 = 1.0\n"
        "nu = 1.0\n"
        "rho = 0.0\n"
        "hurst = 0.5\n"
        "seed = 7\n"
    )
    return str(path)


@pytest.fixture
def rough_params_file(tmp_path):
    path = tmp_path / "rough.params"
    path.write_text("x0=0.0\ny0=0.3\nnu=1.0\nrho=-0.3\nhurst=0.7\n")
    return str(path)


class TestDensityCommand:
    def test_row_count_and_schema(self, params_file, tmp_path):
        out = tmp_path / "d.csv"
        rc = main(
            ["density", params_file, "--t", "0.05",
             "--grid-spec", "50:50:-0.5:0.5:0.4:2.0", "--out", str(out)]
        )
        assert rc == 0
        lines = out.read_text().split("\n")
        assert lines[0] == "x,y,p"
        assert len([l for l in lines if l]) == 1 + 2500
        first = lines[1].split(",")
        assert len(first) == 3
        assert float(first[2]) >= 0.0

    def test_byte_identical_reruns_and_workers(self, params_file, tmp_path):
        args = ["density", params_file, "--t", "0.05",
                "--grid-spec", "20:20:-0.5:0.5:0.4:2.0"]
        outs = []
        for name, extra in (("a", []), ("b", []), ("c", ["--workers", "4"])):
            out = tmp_path / f"{name}.csv"
            assert main(args + ["--out", str(out)] + extra) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_bad_grid_spec_is_config_error(self, params_file):
        assert main(["density", params_file, "--t", "0.05", "--grid-spec", "5:5:0:1"]) == 2

    def test_negative_t_is_domain_error(self, params_file):
        rc = main(["density", params_file, "--t", "-0.05",
                   "--grid-spec", "5:5:0:1:0.5:2"])
        assert rc == 3

    def test_csv_mass_reproduces_normalisation(self, tmp_path):
        # Riemann-summing the emitted grid recovers the unit-mass property
        p = tmp_path / "norm.params"
        p.write_text("x0=0.0\ny0=1.0\nnu=1.0\nrho=-0.3\nhurst=0.3\n")
        out = tmp_path / "norm.csv"
        t = 0.005
        spec = f"120:120:-0.75:0.75:{math.exp(-0.9)}:{math.exp(0.9)}"
        assert main(["density", str(p), "--t", str(t), "--grid-spec", spec,
                     "--out", str(out)]) == 0
        rows = np.loadtxt(str(out), delimiter=",", skiprows=1)
        xs = np.unique(rows[:, 0])
        ys = np.unique(rows[:, 1])
        grid = rows[:, 2].reshape(len(xs), len(ys))
        mass = np.trapezoid(np.trapezoid(grid, ys, axis=1), xs)
        assert 0.85 < mass < 1.15


class TestSmileCommand:
    def test_asymptotic_schema(self, params_file, tmp_path):
        out = tmp_path / "s.csv"
        rc = main(["smile", params_file, "--t", "0.05", "--k-range=-0.2:0.2:0.1",
                   "--out", str(out)])
        assert rc == 0
        lines = [l for l in out.read_text().split("\n") if l]
        assert lines[0] == "k,sigma,diag,method"
        assert len(lines) == 1 + 5  # includes the k = x0 grid point
        for line in lines[1:]:
            k, sigma, diag, method = line.split(",")
            assert method == "asymptotic"
            assert float(sigma) > 0.0

    def test_mc_schema_with_std_err(self, params_file, tmp_path):
        out = tmp_path / "m.csv"
        rc = main(["smile", params_file, "--t", "0.05", "--k-range=-0.1:0.1:0.1",
                   "--method", "mc", "--paths", "5000", "--steps", "32",
                   "--out", str(out)])
        assert rc == 0
        lines = [l for l in out.read_text().split("\n") if l]
        assert lines[0] == "k,sigma,diag,method,std_err"
        for line in lines[1:]:
            fields = line.split(",")
            assert len(fields) == 5
            assert fields[3] == "mc"
            assert float(fields[4]) > 0.0

    def test_ldp_schema(self, params_file, tmp_path):
        out = tmp_path / "l.csv"
        rc = main(["smile", params_file, "--t", "0.25", "--k-range", "0.1:0.2:0.1",
                   "--method", "ldp", "--steps", "32", "--out", str(out)])
        assert rc == 0
        lines = [l for l in out.read_text().split("\n") if l]
        assert lines[0] == "k,sigma,diag,method"
        for line in lines[1:]:
            fields = line.split(",")
            assert fields[3] == "ldp"
            assert float(fields[2]) > 0.0  # minimised energy

    def test_h_above_half_asymptotic_refused(self, rough_params_file):
        rc = main(["smile", rough_params_file, "--t", "0.5",
                   "--k-range", "0.1:0.2:0.1"])
        assert rc == 3

    def test_h_above_half_ldp_supported(self, rough_params_file, tmp_path):
        out = tmp_path / "l7.csv"
        rc = main(["smile", rough_params_file, "--t", "0.5",
                   "--k-range", "0.1:0.2:0.1", "--method", "ldp",
                   "--steps", "32", "--out", str(out)])
        assert rc == 0
        assert len([l for l in out.read_text().split("\n") if l]) == 3

    def test_mc_deterministic_across_workers(self, params_file, tmp_path):
        args = ["smile", params_file, "--t", "0.05", "--k-range=-0.2:0.2:0.1",
                "--method", "mc", "--paths", "20000", "--steps", "64"]
        a = tmp_path / "w1.csv"
        b = tmp_path / "w4.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b), "--workers", "4"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_hurst_sweep_wing_ordering(self, tmp_path):
        # short-expiry wings steepen as H falls: three curves, one command each
        sigmas = {}
        for h in (0.1, 0.3, 0.5):
            p = tmp_path / f"h{h}.params"
            p.write_text(f"x0=0.0\ny0=0.13927\nnu=0.5778\nrho=-0.06867\nhurst={h}\n")
            out = tmp_path / f"s{h}.csv"
            assert main(["smile", str(p), "--t", "0.01", "--k-range",
                         "0.5:0.5:0.1", "--out", str(out)]) == 0
            sigmas[h] = float(out.read_text().split("\n")[1].split(",")[1])
        assert sigmas[0.1] > sigmas[0.3] > sigmas[0.5]

    def test_mc_close_to_asymptotic_near_money(self, params_file, tmp_path):
        out_mc = tmp_path / "mc.csv"
        out_as = tmp_path / "as.csv"
        common = ["smile", params_file, "--t", "0.05", "--k-range=-0.3:0.3:0.15"]
        assert main(common + ["--method", "mc", "--paths", "50000",
                              "--out", str(out_mc)]) == 0
        assert main(common + ["--out", str(out_as)]) == 0
        mc = {l.split(",")[0]: float(l.split(",")[1])
              for l in out_mc.read_text().split("\n")[1:] if l}
        asym = {l.split(",")[0]: float(l.split(",")[1])
                for l in out_as.read_text().split("\n")[1:] if l}
        for k, sigma in mc.items():
            assert abs(sigma - asym[k]) / asym[k] < 0.15


class TestValidateCommand:
    def test_kernel_suite_passes(self, params_file, tmp_path):
        out = tmp_path / "v.json"
        rc = main(["validate", params_file, "--suite", "kernel", "--out", str(out)])
        assert rc == 0
        checks = json.loads(out.read_text())
        assert all(c["pass"] for c in checks)
        assert {"check", "value", "tolerance", "pass"} == set(checks[0].keys())

    def test_density_suite_normalization(self, params_file, tmp_path):
        out = tmp_path / "v.json"
        rc = main(["validate", params_file, "--suite", "density", "--out", str(out)])
        assert rc == 0
        checks = {c["check"]: c for c in json.loads(out.read_text())}
        norm = checks["density_normalization"]
        assert 0.85 < norm["value"] < 1.15

    def test_report_bytes_reproducible(self, params_file, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert main(["validate", params_file, "--suite", "laplace", "--out", str(a)]) == 0
        assert main(["validate", params_file, "--suite", "laplace", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestConfigParsing:
    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "bad.params"
        p.write_text("x0=0\ny0=1\nnu=1\nrho=0\nhurst=0.5\nfrobnicate=3\n")
        assert main(["density", str(p), "--t", "0.1", "--grid-spec",
                     "2:2:0:1:1:2"]) == 2

    def test_missing_key_rejected(self, tmp_path):
        p = tmp_path / "missing.params"
        p.write_text("x0=0\ny0=1\nnu=1\nrho=0\n")
        assert main(["density", str(p), "--t", "0.1", "--grid-spec",
                     "2:2:0:1:1:2"]) == 2

    def test_non_numeric_value_rejected(self, tmp_path):
        p = tmp_path / "nan.params"
        p.write_text("x0=zero\ny0=1\nnu=1\nrho=0\nhurst=0.5\n")
        assert main(["density", str(p), "--t", "0.1", "--grid-spec",
                     "2:2:0:1:1:2"]) == 2

    def test_invalid_model_value_rejected(self, tmp_path):
        p = tmp_path / "neg.params"
        p.write_text("x0=0\ny0=-1\nnu=1\nrho=0\nhurst=0.5\n")
        assert main(["density", str(p), "--t", "0.1", "--grid-spec",
                     "2:2:0:1:1:2"]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["density", str(tmp_path / "nope.params"), "--t", "0.1",
                     "--grid-spec", "2:2:0:1:1:2"]) == 2
