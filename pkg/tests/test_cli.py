import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from shearlab.cli import main
from shearlab.radial_shear import radial_shear_source


@pytest.fixture()
def runner():
    return CliRunner()


def _config(tmp_path, **over):
    cfg = {
        "field": {"source": radial_shear_source(0.05, 1.0)},
        "schedule": {"rho": 1.0, "T": 30.0, "epsilon": 0.01},
        "cycle": {"guess": [1.3, 0.0], "anchor": [1.0, 0.0], "nodes": 512},
        "pipeline": {"frame_method": "parallel_transport", "rho": 1.0},
        "output": str(tmp_path / "out"),
    }
    cfg.update(over)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_missing_config_exits_2(runner):
    res = runner.invoke(main, ["shear", "--config", "/nope/none.json"])
    assert res.exit_code == 2


def test_missing_field_file_exits_2(runner, tmp_path):
    cfg = {"field": {"file": "missing.field"},
           "output": str(tmp_path / "o")}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    res = runner.invoke(main, ["shear", "--config", str(p)])
    assert res.exit_code == 2


def test_invalid_schedule_exits_2(runner, tmp_path):
    path = _config(tmp_path, schedule={"rho": 5.0, "T": 1.0, "epsilon": 0.1})
    res = runner.invoke(main, ["shear", "--config", path])
    assert res.exit_code == 2


def test_find_cycle_command(runner, tmp_path):
    path = _config(tmp_path)
    res = runner.invoke(main, ["find-cycle", "--config", path])
    assert res.exit_code == 0, res.output
    out = tmp_path / "out"
    summary = json.loads((out / "find-cycle_summary.json").read_text())
    assert abs(summary["p0"] - 2 * np.pi) < 1e-8
    for art in summary["artifacts"]:
        assert (out / art).exists()


def test_shear_summary_values(runner, tmp_path):
    path = _config(tmp_path)
    res = runner.invoke(main, ["shear", "--config", path])
    assert res.exit_code == 0, res.output
    summary = json.loads(
        (tmp_path / "out" / "shear_summary.json").read_text())
    assert abs(summary["sigma"] - 4 * np.pi) < 1e-3
    assert abs(summary["Lambda"] - 0.01 * summary["sigma"]
               / abs(summary["lambda1"])) < 1e-9
    assert summary["morse"]["is_morse"]
    assert (tmp_path / "out" / "phi.gp").exists()


def test_shear_deterministic_summaries(runner, tmp_path):
    path = _config(tmp_path)
    outs = []
    for name in ("a", "b"):
        res = runner.invoke(main, ["shear", "--config", path, "--out",
                                   str(tmp_path / name), "--seed", "7"])
        assert res.exit_code == 0, res.output
        outs.append((tmp_path / name / "shear_summary.json").read_bytes())
    assert outs[0] == outs[1]


def test_singular_limit_command(runner, tmp_path):
    path = _config(tmp_path, pipeline={"frame_method": "parallel_transport",
                                       "rho": 1.0, "Lambda": 100.0,
                                       "a_values": [0.0, 1.0], "grid": 200})
    res = runner.invoke(main, ["singular-limit", "--config", path])
    assert res.exit_code == 0, res.output
    summary = json.loads(
        (tmp_path / "out" / "singular-limit_summary.json").read_text())
    assert summary["q0"] == 4
    for art in summary["artifacts"]:
        assert (tmp_path / "out" / art).exists()


def test_lyapunov_command(runner, tmp_path):
    path = _config(tmp_path, schedule={"rho": 1.0, "T": 20.0, "epsilon": 0.0},
                   lyapunov={"iterates": 60, "burn_in": 10})
    res = runner.invoke(main, ["lyapunov", "--config", path])
    assert res.exit_code == 0, res.output
    summary = json.loads(
        (tmp_path / "out" / "lyapunov_summary.json").read_text())
    assert summary["exponents_per_map"][0] == pytest.approx(0.0, abs=1e-4)
    assert summary["exponents_per_map"][-1] == pytest.approx(-0.05 * 20.0,
                                                             rel=0.05)


def test_sweep_command(runner, tmp_path):
    path = _config(tmp_path,
                   field={"source": radial_shear_source(0.05, 20.0)},
                   schedule={"rho": 1.0, "T": 60.0, "epsilon": 0.1},
                   sweep={"T_min": 60.0, "T_max": 60.2, "points": 3,
                          "iterates": 80, "burn_in": 15})
    res = runner.invoke(main, ["sweep", "--config", path])
    assert res.exit_code == 0, res.output
    out = tmp_path / "out"
    summary = json.loads((out / "sweep_summary.json").read_text())
    assert summary["points"] == 3
    assert (out / "sweep.csv").exists()
    assert (out / "sweep.gp").exists()


def test_singular_limit_defaults_to_flow_hyperbolicity(runner, tmp_path):
    # pipeline.Lambda omitted: the map is built at eps*sigma/(2L*|lambda1|)
    path = _config(tmp_path,
                   schedule={"rho": 1.0, "T": 30.0, "epsilon": 0.5},
                   pipeline={"frame_method": "parallel_transport",
                             "rho": 1.0, "a_values": [0.0], "grid": 64})
    res = runner.invoke(main, ["singular-limit", "--config", path])
    assert res.exit_code == 0, res.output
    summary = json.loads(
        (tmp_path / "out" / "singular-limit_summary.json").read_text())
    # RS beta=1: sigma = 4 pi, 2L = 4 pi, lam = 0.05 -> 0.5 / 0.05 = 10
    assert abs(summary["Lambda"] - 10.0) < 1e-6


def test_normal_form_command(runner, tmp_path):
    path = _config(tmp_path)
    res = runner.invoke(main, ["normal-form", "--config", path])
    assert res.exit_code == 0, res.output
    summary = json.loads(
        (tmp_path / "out" / "normal-form_summary.json").read_text())
    assert abs(summary["Sigma"][0] + 4 * np.pi) < 1e-3
    assert abs(summary["A"][0] + 0.05) < 1e-6
    assert (tmp_path / "out" / "normal_form.csv").exists()


def test_misiurewicz_search_command(runner, tmp_path):
    path = _config(tmp_path, pipeline={"frame_method": "parallel_transport",
                                       "rho": 1.0, "Lambda": 100.0,
                                       "N_target": 12, "horizon": 20})
    res = runner.invoke(main, ["misiurewicz-search", "--config", path])
    assert res.exit_code == 0, res.output
    out = tmp_path / "out"
    rep = json.loads((out / "misiurewicz_report.json").read_text())
    assert rep["clearance_ok"]
    assert rep["mixing_N"] == 1
    assert (out / "search_trace.csv").exists()


def test_pipeline_failure_exits_1(runner, tmp_path):
    # an equilibrium guess cannot seed the cycle search
    path = _config(tmp_path, cycle={"guess": [0.0, 0.0]})
    res = runner.invoke(main, ["find-cycle", "--config", path])
    assert res.exit_code == 1
