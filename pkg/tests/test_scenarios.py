import csv
import io

import numpy as np
import pytest

from modalsim.config import validate_mapping
from modalsim.scenarios import Metric, ScenarioResult, render_csv, render_summary, run_scenario, write_outputs


@pytest.fixture(scope="module")
def recoil_run():
    cfg = validate_mapping({}, scenario="recoil")
    return cfg, run_scenario(cfg)


def test_csv_header_and_precision():
    res = ScenarioResult("demo", ["x [length]", "p [1]"], [(1 / 3, -0.0), (2, True)])
    rows = list(csv.reader(io.StringIO(render_csv(res))))
    assert rows[0] == ["x [length]", "p [1]"]
    assert rows[1] == ["0.333333333333", "0"]
    assert rows[2] == ["2", "true"]


def test_every_column_has_units(recoil_run):
    _, res = recoil_run
    assert all(c.endswith("]") and "[" in c for c in res.columns)


def test_summary_echoes_config(recoil_run):
    cfg, res = recoil_run
    text = render_summary(res, cfg)
    assert text.startswith("scenario: recoil\noverall: PASS")
    assert "recoil.w = inf" in text
    assert validate_mapping({}, scenario="recoil") == cfg


def test_write_outputs(tmp_path, recoil_run):
    cfg, res = recoil_run
    data, summary = write_outputs(res, cfg, tmp_path / "out")
    assert data.name == "recoil.csv" and summary.name == "recoil.summary.txt"
    assert data.read_text() == render_csv(res)


def test_overall_verdict():
    res = ScenarioResult("demo", ["a [1]"], [], [Metric("m", 1.0, "-", None), Metric("n", 0.5, ">= 1", False)])
    assert not res.passed
    assert res.metric("n").verdict == "FAIL"


def test_trajectory_reports_classical_quantities():
    res = run_scenario(validate_mapping({}, scenario="trajectory"))
    q = np.array([row[2] for row in res.rows])
    assert abs(q.sum() - 1) <= 1e-9
    assert res.metric("action_over_hbar").passed
    assert res.metric("ehrenfest_offset_cells").passed


def test_two_observers_reports_agreement():
    res = run_scenario(validate_mapping({}, scenario="two-observers"))
    P = np.array([row[2] for row in res.rows])
    assert abs(P.sum() - 1) <= 1e-10
    assert 0 < res.metric("agreement_mass_w1").value <= 1


def test_narrow_limit_block_resolution():
    # sigma far below the pitch: the state is flat over the 8 grid points of one block
    res = run_scenario(validate_mapping({"detector": {"sigma": 1e-4}}, scenario="localization"))
    assert res.metric("relational_std").value == pytest.approx(np.sqrt(63 / 12), abs=1e-9)
    assert not res.metric("relational_std").passed
