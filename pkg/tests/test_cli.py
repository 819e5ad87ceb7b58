import json

import pandas as pd
import pytest

from app.cli import main
from app.core.constants import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, RESIDUAL_COLUMNS
from app.core.reports import read_report


def test_verify_constants_passes(tmp_path, capsys):
    """Test the exact checks pass and the report lands in the output directory"""
    code = main(["verify-constants", "--primes", "2,3", "--out-dir", str(tmp_path)])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["passed"] and summary["failures"] == []
    report = read_report(tmp_path / "constants.json")
    assert report["primes"] == [2, 3]


def test_verify_constants_corrupt_run_fails(tmp_path, capsys):
    """Test a perturbed constant is caught"""
    code = main(["verify-constants", "--primes", "2", "--test-corrupt", "--out-dir", str(tmp_path)])
    assert code == EXIT_FAILURE
    assert json.loads(capsys.readouterr().out)["failures"] == ["limit_form[2]"]


def test_orbital_output(capsys):
    """Test orbital integrals at diag(1, 6) over Q_5"""
    code = main(["orbital", "--p", "5", "--m", "0", "--a", "1", "--b", "6"])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "orb = 5"
    assert lines[2] == "worb_hat = 2*log(5)"
    assert [line.split(" = ")[0] for line in lines] == ["orb", "worb", "worb_hat", "worb_tilde"]


def test_orbital_non_regular(capsys):
    """Test a = b is rejected with a structural failure"""
    code = main(["orbital", "--p", "5", "--a", "2", "--b", "2"])
    assert code == EXIT_FAILURE
    assert "non-regular" in capsys.readouterr().err


def test_orbital_bad_rational():
    assert main(["orbital", "--p", "5", "--a", "1/0", "--b", "2"]) == EXIT_USAGE


def test_limit_form(capsys):
    assert main(["limit-form", "--p", "5"]) == EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["zero"] is True
    assert payload["total"] == {"const": "0", "log": {}}


def test_sweep_writes_reports(tmp_path):
    """Test a small sweep writes the ledger, residual table and per-n table"""
    code = main(
        [
            "sweep",
            "--x-grid",
            "1000,2000",
            "--families",
            "divisor,harmonic,hyp_deg1",
            "--per-n",
            "--workers",
            "1",
            "--out-dir",
            str(tmp_path),
        ]
    )
    assert code == EXIT_OK
    ledger = read_report(tmp_path / "ledger.json")
    assert ledger["s_primes"] == [2]
    assert ledger["ledger"]["F"]["value"] == 0.0
    table = pd.read_csv(tmp_path / "residuals.csv")
    assert list(table.columns) == RESIDUAL_COLUMNS
    assert len(table) == 6
    per_n = pd.read_csv(tmp_path / "hyperbolic.csv")
    assert per_n["n"].max() == 1999


def test_sweep_config_file(tmp_path):
    """Test the run configuration file is honored and validated"""
    config = tmp_path / "run.cfg"
    config.write_text("s_primes = 2\nx_grid = 500,1000\nprofile = narrow\n", encoding="utf-8")
    out = tmp_path / "out"
    code = main(["sweep", "--config", str(config), "--families", "divisor", "--out-dir", str(out)])
    assert code == EXIT_OK
    assert read_report(out / "ledger.json")["profile"] == "narrow"

    config.write_text("s_primes = 3\n", encoding="utf-8")
    assert main(["sweep", "--config", str(config), "--out-dir", str(out)]) == EXIT_USAGE


def test_unknown_command():
    assert main(["integrate"]) == EXIT_USAGE


@pytest.mark.parametrize("p", ["0", "1", "4", "x"])
def test_limit_form_rejects_non_primes(p, capsys):
    """Test non-prime input is a usage error, not a traceback"""
    assert main(["limit-form", "--p", p]) == EXIT_USAGE
    assert "expected a prime" in capsys.readouterr().err


def test_prime_lists_are_validated():
    assert main(["verify-constants", "--primes", "2,4"]) == EXIT_USAGE
    assert main(["orbital", "--p", "6", "--a", "1", "--b", "2"]) == EXIT_USAGE
