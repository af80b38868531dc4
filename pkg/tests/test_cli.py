import subprocess
import sys

import numpy as np
import pytest

import depthlab.cli as cli
from depthlab import NumericalError


@pytest.fixture
def uni_csv(tmp_path):
    p = tmp_path / "uni.csv"
    p.write_text("1\n2\n5\n")
    return str(p)


@pytest.fixture
def cross_csv(tmp_path):
    p = tmp_path / "cross.csv"
    p.write_text("1,0\n-1,0\n0,1\n0,-1\n")
    return str(p)


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_depth_population_cauchy(capsys):
    code, out, _ = run_cli(capsys, "depth", "--model", "cauchy:d=2", "--point", "0,0")
    assert code == 0 and out.strip() == "0.5"


def test_depth_population_gaussian_quartile(capsys):
    code, out, _ = run_cli(capsys, "depth", "--model", "gaussian:d=3",
                           "--point", "0.674489750196082,0,0")
    assert code == 0 and out.strip() == "0.25"


def test_depth_far_point_sample(capsys, cross_csv):
    code, out, _ = run_cli(capsys, "depth", "--data", cross_csv,
                           "--point", "9e9,9e9", "--method", "exact2d")
    assert code == 0 and out.strip() == "0"


def test_depth_requires_one_source(capsys, cross_csv):
    code, _, err = run_cli(capsys, "depth", "--point", "0,0")
    assert code == 1 and "exactly one" in err
    code, _, err = run_cli(capsys, "depth", "--model", "cauchy:d=2",
                           "--data", cross_csv, "--point", "0,0")
    assert code == 1


def test_depth_malformed_csv(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    code, _, err = run_cli(capsys, "depth", "--data", str(bad), "--point", "0,0")
    assert code == 1
    assert "row 2" in err and "column 2" in err


def test_depth_ragged_csv(capsys, tmp_path):
    bad = tmp_path / "ragged.csv"
    bad.write_text("1,2\n3\n")
    code, _, err = run_cli(capsys, "depth", "--data", str(bad), "--point", "0,0")
    assert code == 1 and "row 2" in err


def test_median_univariate(capsys, uni_csv):
    code, out, _ = run_cli(capsys, "median", "--data", uni_csv, "--kind", "location")
    assert code == 0
    assert "point: 2" in out
    assert "achieved_depth: 0.666666666667" in out


def test_median_cross(capsys, cross_csv):
    code, out, _ = run_cli(capsys, "median", "--data", cross_csv, "--kind", "location")
    assert code == 0
    assert "point: 0 0" in out and "achieved_depth: 0.5" in out


def test_median_scatter_requires_mode(capsys, cross_csv):
    code, _, err = run_cli(capsys, "median", "--data", cross_csv,
                           "--kind", "scatter:standard")
    assert code == 1 and "--mode" in err


def test_median_scatter_isotropic(capsys, cross_csv):
    code, out, _ = run_cli(capsys, "median", "--data", cross_csv,
                           "--kind", "scatter:alpha=1", "--mode", "isotropic")
    assert code == 0
    assert "matrix:" in out and "sigma:" in out and "achieved_depth:" in out


def test_median_scatter_full_insufficient_data(capsys, tmp_path):
    p = tmp_path / "two.csv"
    p.write_text("0,0\n1,1\n")
    code, _, err = run_cli(capsys, "median", "--data", str(p),
                           "--kind", "scatter:standard", "--mode", "full")
    assert code == 1 and "n >= d+1" in err


def test_median_bad_kind(capsys, cross_csv):
    code, _, err = run_cli(capsys, "median", "--data", cross_csv, "--kind", "scatter")
    assert code == 1


def test_solve_sigma_outputs(capsys):
    code, out, _ = run_cli(capsys, "solve-sigma", "--model", "cauchy:d=4",
                           "--depth", "standard")
    assert code == 0 and out.strip() == "1.414213562373"
    code, out, _ = run_cli(capsys, "solve-sigma", "--model", "cauchy:d=2",
                           "--depth", "alpha")
    assert code == 0 and out.strip() == "1.000000000000"
    code, out, _ = run_cli(capsys, "solve-sigma", "--model", "gaussian:d=7",
                           "--depth", "standard")
    assert code == 0 and out.strip() == "0.674489750196"


def test_solve_sigma_numerical_failure_exit_code(capsys, monkeypatch):
    def boom(model):
        raise NumericalError("could not bracket the root")
    monkeypatch.setattr(cli, "population_scatter_sigma", boom)
    code, _, err = run_cli(capsys, "solve-sigma", "--model", "cauchy:d=2",
                           "--depth", "standard")
    assert code == 2 and "bracket" in err


def test_certify_holds(capsys):
    code, out, _ = run_cli(capsys, "certify", "--model", "cauchy:d=2",
                           "--variant", "A2", "--gamma", "1", "--kappa", "0.079",
                           "--epsilon", "0.05")
    assert code == 0
    assert "holds: true" in out
    assert "witnessed_inf: 0.25" in out


def test_certify_fails_above_infimum(capsys):
    code, out, _ = run_cli(capsys, "certify", "--model", "cauchy:d=2",
                           "--variant", "A2", "--gamma", "1", "--kappa", "0.26")
    assert code == 0
    assert "holds: false" in out


def test_certify_range_violation_prints_reason(capsys):
    code, out, _ = run_cli(capsys, "certify", "--model", "cauchy:d=2",
                           "--variant", "A2", "--gamma", "4", "--kappa", "0.2")
    assert code == 0
    assert "holds: false" in out and "reason:" in out and "1/2" in out


def test_unknown_flag_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["depth", "--model", "cauchy:d=2", "--point", "0,0", "--bogus"])
    assert exc.value.code == 1


def test_help_lists_flags():
    for sub, flags in [("depth", ["--model", "--data", "--point", "--method",
                                  "--dirs", "--seed"]),
                       ("median", ["--data", "--kind", "--mode", "--dirs", "--seed"]),
                       ("solve-sigma", ["--model", "--depth"]),
                       ("certify", ["--model", "--variant", "--gamma", "--kappa",
                                    "--epsilon", "--sigma"]),
                       ("experiment", ["--config", "--out"])]:
        proc = subprocess.run([sys.executable, "-m", "depthlab.cli", sub, "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        for flag in flags:
            assert flag in proc.stdout


EXP_TOML = """
kind = "maxdepth_coverage"
[model]
family = "gaussian"
[grid]
n = [300]
d = [2]
epsilon = [0.0, 0.2]
[run]
delta = 0.05
replications = 4
master_seed = 17
[method]
median_directions = 16
multistarts = 2
midpoint_cap = 128
"""


def test_experiment_command(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DEPTHLAB_THREADS", "1")
    cfg = tmp_path / "exp.toml"
    cfg.write_text(EXP_TOML)
    out1 = tmp_path / "out1"
    code, out, _ = run_cli(capsys, "experiment", "--config", str(cfg),
                           "--out", str(out1))
    assert code == 0
    assert "coverage" in out
    assert (out1 / "report.csv").exists() and (out1 / "report.json").exists()
    out2 = tmp_path / "out2"
    code, _, _ = run_cli(capsys, "experiment", "--config", str(cfg),
                         "--out", str(out2))
    assert code == 0
    assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()


def test_experiment_side_condition_names_minimal_n(capsys, tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(EXP_TOML.replace("n = [300]", "n = [10]"))
    code, _, err = run_cli(capsys, "experiment", "--config", str(cfg),
                           "--out", str(tmp_path / "o"))
    assert code == 1 and "14" in err
    assert not (tmp_path / "o").exists()  # refused before any sampling


def test_experiment_uncertified_growth(capsys, tmp_path):
    cfg = tmp_path / "unc.toml"
    cfg.write_text(EXP_TOML.replace('kind = "maxdepth_coverage"',
                                    'kind = "location_rate"')
                   + "\n[growth]\ngamma = 1.0\nkappa = 0.45\n")
    code, _, err = run_cli(capsys, "experiment", "--config", str(cfg),
                           "--out", str(tmp_path / "o"))
    assert code == 1 and "A2" in err


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, "experiment", "--config",
                           str(tmp_path / "nope.toml"), "--out", str(tmp_path / "o"))
    assert code == 1


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "depthlab.cli", "depth",
                           "--model", "cauchy:d=2", "--point", "1,1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "0.25"
