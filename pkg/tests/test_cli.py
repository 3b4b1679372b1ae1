import subprocess
import sys

import pytest

from modalsim import cli
from modalsim.config import SCENARIOS
from modalsim.errors import InvariantViolation


def run(*args):
    return subprocess.run([sys.executable, "-m", "modalsim", *args], capture_output=True, text=True)


def test_list_scenarios(capsys):
    assert cli.main(["--list-scenarios"]) == cli.EXIT_OK
    assert capsys.readouterr().out.split() == list(SCENARIOS)


def test_config_error_exit(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text('scenario = "localization"\ndetector.sigma = -1.0\n')
    r = run("--config", str(p), "--out", str(tmp_path))
    assert r.returncode == 1
    assert "detector.sigma" in r.stderr


def test_bad_seed_rejected():
    with pytest.raises(SystemExit):
        cli.main(["--scenario", "epr", "--seed", "-3"])


def test_invariant_exit(tmp_path, monkeypatch, capsys):
    def broken(cfg):
        raise InvariantViolation("trace of the display state drifted")

    monkeypatch.setitem(cli.__dict__, "run_scenario", broken)
    assert cli.main(["--scenario", "epr", "--out", str(tmp_path)]) == cli.EXIT_INVARIANT
    assert "trace of the display state" in capsys.readouterr().err


def test_epr_outputs(tmp_path):
    r = run("--scenario", "epr", "--seed", "17", "--out", str(tmp_path))
    assert r.returncode == 0, r.stderr
    summary = (tmp_path / "epr.summary.txt").read_text()
    assert "reduced_rho2_max_deviation" in summary and "PASS" in summary
    assert "after reading 1" in summary
    assert "seed = 17" in summary
    assert (tmp_path / "epr.csv").read_text().startswith("basis [-],")


def test_print_config_roundtrip(tmp_path, capsys):
    assert cli.main(["--scenario", "trajectory", "--print-config"]) == 0
    p = tmp_path / "echo.toml"
    p.write_text(capsys.readouterr().out)
    assert cli.main(["--config", str(p), "--print-config"]) == 0
    assert capsys.readouterr().out == p.read_text()


@pytest.mark.parametrize("scenario", ["localization", "recoil", "deloc-device", "epr", "oracle-suite"])
def test_deterministic_csv(tmp_path, scenario):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["--scenario", scenario, "--seed", "123", "--out", str(a)]) == 0
    assert cli.main(["--scenario", scenario, "--seed", "123", "--out", str(b)]) == 0
    name = f"{scenario}.csv"
    assert (a / name).read_bytes() == (b / name).read_bytes()
