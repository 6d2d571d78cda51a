from pathlib import Path

import numpy as np
import pytest

from pbvp.cli import EXIT_ANOMALY, EXIT_BRACKET, EXIT_CONFIG, EXIT_NOT_APPLICABLE, EXIT_NOT_CONVERGED, EXIT_NUMERIC, EXIT_OK, main

CONFIGS = Path(__file__).parents[1] / "configs"
NEG_JUMP_U = "(exp(t) - exp(2*pi - t)) / (2*(exp(2*pi) - 1))"


def write(tmp_path, text, name="cfg.json"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_solve_linear_ok(capsys, tmp_path):
    out = tmp_path / "u.csv"
    assert main(["solve-linear", str(CONFIGS / "linear_sin.json"), "--n", "256", "--out", str(out)]) == EXIT_OK
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (257, 2)
    assert np.max(np.abs(data[:, 1] - np.sin(data[:, 0]) / 2)) < 1e-6
    assert "C1" in capsys.readouterr().out


def test_csv_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        main(["solve-linear", str(CONFIGS / "linear_jumps.json"), "--n", "128", "--out", str(path)])
    assert a.read_bytes() == b.read_bytes()


def test_verify_ok():
    assert main(["verify", str(CONFIGS / "corollary_constant.json"), "--theorem", "2.3"]) == EXIT_OK


def test_verify_not_applicable():
    assert main(["verify", "--theorem", "2.1", "--u", "1", "--M", "1"]) == EXIT_NOT_APPLICABLE


def test_verify_anomaly(capsys):
    code = main(["verify", "--theorem", "2.1", "--u", NEG_JUMP_U, "--M", "1", "--n", "256"])
    assert code == EXIT_ANOMALY
    assert "ANOMALY" in capsys.readouterr().out


def test_verify_mirror_anomaly():
    code = main(["verify", "--theorem", "2.4", "--u", f"-({NEG_JUMP_U})", "--M", "1", "--n", "256"])
    assert code == EXIT_ANOMALY


def test_verify_jump_mismatch_is_config_error(capsys):
    assert main(["verify", "--theorem", "2.1", "--u", "0", "--M", "1", "--mu", "-1"]) == EXIT_CONFIG
    assert "does not match" in capsys.readouterr().err


def test_missing_required_field(tmp_path, capsys):
    path = write(tmp_path, '{"linear": {"sigma": "sin(t)"}}')
    assert main(["solve-linear", path]) == EXIT_CONFIG
    assert "linear.M: required" in capsys.readouterr().err


def test_bad_expression_is_config_error(tmp_path, capsys):
    path = write(tmp_path, '{"linear": {"sigma": "sin(t", "M": 1}}')
    assert main(["solve-linear", path]) == EXIT_CONFIG
    assert "offset 5" in capsys.readouterr().err


def test_M_out_of_range_is_config_error(tmp_path, capsys):
    path = write(tmp_path, '{"linear": {"sigma": "1", "M": 25}}')
    assert main(["solve-linear", path]) == EXIT_CONFIG
    assert "M must be <= 20" in capsys.readouterr().err


def test_nonfinite_evaluation_is_numeric_failure(tmp_path):
    path = write(tmp_path, '{"linear": {"sigma": "log(t - 10)", "M": 1}}')
    assert main(["solve-linear", path, "--n", "16"]) == EXIT_NUMERIC


def test_iterate_outputs(tmp_path):
    out = tmp_path / "run"
    plot = tmp_path / "plot.csv"
    args = ["iterate", str(CONFIGS / "exponential_bracket.json"), "--n", "128", "--out", str(out), "--plot-data", str(plot)]
    assert main(args) == EXIT_OK
    for name in ("phi.csv", "psi.csv", "history.csv"):
        assert (out / name).exists()
    assert plot.read_text().splitlines()[0] == "k,t,alpha_k,beta_k"


def test_iterate_bracket_rejected(tmp_path):
    path = write(tmp_path, '{"problem": {"f": "-u^3", "M": 4}, "bracket": {"alpha": "-2.5", "beta": "2.5"}}')
    assert main(["iterate", path, "--n", "64"]) == EXIT_BRACKET


def test_iterate_not_converged():
    assert main(["iterate", str(CONFIGS / "cubic.json"), "--n", "64", "--max-iter", "3"]) == EXIT_NOT_CONVERGED


def test_iterate_force_runs(tmp_path):
    path = write(tmp_path, '{"problem": {"f": "-u", "M": 1}, "bracket": {"alpha": "-2.5", "beta": "2.5"}}')
    assert main(["iterate", path, "--n", "64", "--force"]) == EXIT_OK


def test_oracle_linear(capsys):
    assert main(["oracle", str(CONFIGS / "linear_sin.json"), "--n", "128"]) == EXIT_OK
    assert "observed order" in capsys.readouterr().out


def test_unknown_check_name_rejected():
    with pytest.raises(SystemExit):
        main(["verify", "--theorem", "9.9", "--u", "0"])
