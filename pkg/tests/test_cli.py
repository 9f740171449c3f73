import json

import numpy as np
from click.testing import CliRunner

from pqst.bench import load_fixture
from pqst.cli import main
from pqst.operators import expectation, parse_observable
from pqst.qcore import save_density_matrix


class _Result:
    """CliRunner result with stdout and stderr merged into .output."""

    def __init__(self, result):
        self.exit_code = result.exit_code
        err = ""
        try:
            err = result.stderr
        except (AttributeError, ValueError):
            pass
        self.output = result.output + err


def run(*args):
    return _Result(CliRunner().invoke(main, list(args)))


def test_validate_passes():
    result = run("validate")
    assert result.exit_code == 0
    assert "FAIL" not in result.output
    assert "checks passed" in result.output


def test_ensemble_info():
    result = run("ensemble-info", "--ensemble", "zeta-m:2", "--n", "3")
    assert result.exit_code == 0
    assert "members: 13" in result.output
    result = run("ensemble-info", "--ensemble", "bogus", "--n", "2")
    assert result.exit_code == 2


def test_reconstruct_exact_fidelity():
    result = run("reconstruct", "--state", "table2-v",
                 "--sets", "zeta-X,zeta-A:1|zeta-A:2", "--exact")
    assert result.exit_code == 0
    fid = float(result.output.split("fidelity vs input:")[1].strip())
    assert fid >= 1 - 1e-10


def test_reconstruct_n3_exact():
    result = run("reconstruct", "--state", "rho3",
                 "--sets", "zeta-m:3,zeta-m:1,zeta-m:2", "--exact")
    assert result.exit_code == 0


def test_reconstruct_missing_set_exit_2():
    result = run("reconstruct", "--state", "table2-v",
                 "--sets", "zeta-A:1|zeta-A:2", "--exact")
    assert result.exit_code == 2
    assert "diagonal" in result.output and "{1,2}" in result.output


def test_reconstruct_sampled_requires_seed():
    result = run("reconstruct", "--state", "table2-v",
                 "--sets", "zeta-X,zeta-A:1|zeta-A:2", "--shots", "100")
    assert result.exit_code == 2
    assert "seed" in result.output


def test_reconstruct_report_file(tmp_path):
    out = tmp_path / "report.json"
    result = run("reconstruct", "--state", "table2-i",
                 "--sets", "zeta-X,zeta-A:1|zeta-A:2", "--shots", "2000",
                 "--seed", "4", "--output", str(out))
    assert result.exit_code == 0
    report = json.loads(out.read_text())
    assert report["n_qubits"] == 2
    assert report["seed"] == 4
    assert len(report["estimate_re"]) == 4
    assert all(any(row) for row in report["trusted"])


def test_reconstruct_from_state_file(tmp_path):
    path = tmp_path / "state.json"
    save_density_matrix(path, load_fixture("table2-ii").state)
    result = run("reconstruct", "--state", str(path),
                 "--sets", "zeta-X,zeta-A:1|zeta-A:2", "--exact")
    assert result.exit_code == 0


def test_estimate_exact_matches_trace():
    result = run("estimate", "--state", "rho2X", "--obs", "1 ZZ",
                 "--method", "pqst", "--exact")
    assert result.exit_code == 0
    value = float(result.output.split("estimate:")[1].strip())
    rho = load_fixture("rho2X").state
    assert abs(value - expectation(parse_observable("1 ZZ"), rho.mat)) < 1e-10


def test_estimate_rotated_matches_direct():
    result = run("estimate", "--state", "rho2", "--obs", "1 ZX",
                 "--method", "pqst-rotated", "--exact")
    assert result.exit_code == 0
    value = float(result.output.split("estimate:")[1].strip())
    rho = load_fixture("rho2").state
    assert abs(value - expectation(parse_observable("1 ZX"), rho.mat)) < 1e-10
    assert "pqst-rotated" in result.output


def test_estimate_sampled_prints_stderr():
    result = run("estimate", "--state", "rho2", "--obs", "O2X",
                 "--method", "pauli", "--shots", "2000", "--seed", "8")
    assert result.exit_code == 0
    assert "stderr:" in result.output


def test_estimate_malformed_observable_exit_2():
    result = run("estimate", "--state", "rho2", "--obs", "1 QQ",
                 "--method", "pqst", "--exact")
    assert result.exit_code == 2
    assert "term 1" in result.output


def test_bench_grid_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ("bench", "--state", "rho2", "--obs", "O2X",
            "--methods", "pqst-auto,pauli", "--trials", "30", "--seed", "7")
    assert run(*args, "--output", str(a)).exit_code == 0
    assert run(*args, "--workers", "3", "--output", str(b)).exit_code == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert len(lines) == 1 + 2 * 4  # header + methods x default budgets


def test_bench_requires_seed(tmp_path):
    result = run("bench", "--state", "rho2", "--obs", "O2X",
                 "--output", str(tmp_path / "x.csv"))
    assert result.exit_code == 2


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"state": "rho2X", "obs": "1 ZZ", "exact": True}))
    result = run("estimate", "--method", "pqst", "--config", str(cfg))
    assert result.exit_code == 0
    # flag overrides the config's observable
    result = run("estimate", "--obs", "1 XX", "--method", "pqst",
                 "--config", str(cfg))
    assert result.exit_code == 0
    value = float(result.output.split("estimate:")[1].strip())
    rho = load_fixture("rho2X").state
    assert abs(value - expectation(parse_observable("1 XX"), rho.mat)) < 1e-10
