import json

import pytest

from thermgrid import Box, HeatSource, Scenario, SinkPatch
from thermgrid.cli import EXIT_OK, EXIT_SCENARIO, EXIT_SOLVER, EXIT_USAGE, main


@pytest.fixture
def scenario_file(tmp_path, small_block):
    path = tmp_path / "block.json"
    small_block.to_json(path)
    return path


def test_verify_passes(capsys):
    assert main(["verify"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out


def test_missing_scenario_is_exit_3(capsys):
    assert main(["steady", "--scenario", "missing.json"]) == EXIT_SCENARIO
    assert "missing.json" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [[], ["bogus"], ["steady", "--fabric", "finfet"], ["steady", "--spacing", "-2"],
                                  ["steady", "--fabric", "m3d", "--power", "1", "--calibrate-to", "400"],
                                  ["steady", "--power", "1e-6"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert capsys.readouterr().err


def test_steady_scenario_file(scenario_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["steady", "--scenario", str(scenario_file), "--out", str(out), "--format", "vtk"]) == EXIT_OK
    report = json.loads((out / "block.report.json").read_text())
    assert report["peak_location"]["label"] == "block"
    assert (out / "block.T.vtk").read_text().startswith("# vtk DataFile Version 3.0")
    assert "peak_T" in capsys.readouterr().out


def test_steady_is_deterministic(scenario_file, tmp_path):
    for name in ("a", "b"):
        assert main(["steady", "--scenario", str(scenario_file), "--power", "2e-7", "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "block.report.json").read_text() == (tmp_path / "b" / "block.report.json").read_text()


def test_calibrate_and_report(scenario_file, tmp_path, capsys):
    assert main(["calibrate", "--scenario", str(scenario_file), "--calibrate-to", "350", "--out", str(tmp_path)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert abs(result["peak_T"] - 350.0) <= 1.0
    assert main(["calibrate", "--scenario", str(scenario_file)]) == EXIT_USAGE


def test_calibrated_steady_records_power(scenario_file, tmp_path):
    assert main(["steady", "--scenario", str(scenario_file), "--calibrate-to", "340", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "block.report.json").read_text())
    assert report["power"] > 0
    assert report["meta"]["calibration"]["mode"] == "calibrated"
    assert abs(report["peak_T"] - 340.0) <= 1.0
    assert main(["report", str(tmp_path / "block.report.json")]) == EXIT_OK


def test_report_bad_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["report", str(bad)]) == EXIT_SCENARIO
    assert main(["report", str(tmp_path / "none.json")]) == EXIT_SCENARIO


def test_transient_csv(scenario_file, tmp_path):
    rc = main(["transient", "--scenario", str(scenario_file), "--probe", "block", "--probe", "foot",
               "--t-end", "10", "--dt", "0.5", "--hold", "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "block.trace.csv").read_text().splitlines()
    assert lines[0] == "t_ns,block,foot"
    assert len(lines) == 22


def test_transient_needs_probe(scenario_file):
    assert main(["transient", "--scenario", str(scenario_file), "--t-end", "1"]) == EXIT_USAGE


def test_transient_bad_dt(scenario_file):
    assert main(["transient", "--scenario", str(scenario_file), "--probe", "block", "--dt", "0.3"]) == EXIT_SCENARIO


def test_compare_saved_reports(scenario_file, tmp_path, capsys):
    for name, p in (("a", "2e-7"), ("b", "1e-7")):
        main(["steady", "--scenario", str(scenario_file), "--power", p, "--out", str(tmp_path / name)])
    capsys.readouterr()
    rc = main(["compare", str(tmp_path / "a" / "block.report.json"), str(tmp_path / "b" / "block.report.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    result = json.loads((tmp_path / "comparison.json").read_text())
    assert result["delta_K"] > 0
    assert main(["compare", str(tmp_path / "a" / "block.report.json")]) == EXIT_USAGE


def test_solver_failure_exit_code(monkeypatch, scenario_file):
    from thermgrid import cli
    from thermgrid.errors import SolverDivergence

    def boom(*a, **k):
        raise SolverDivergence("cap reached")

    monkeypatch.setattr(cli, "steady_state", boom)
    assert main(["steady", "--scenario", str(scenario_file)]) == EXIT_SOLVER


def test_thread_cap(monkeypatch, scenario_file):
    monkeypatch.setenv("THERMGRID_THREADS", "1")
    assert main(["steady", "--scenario", str(scenario_file)]) == EXIT_OK
    monkeypatch.setenv("THERMGRID_THREADS", "zero")
    assert main(["steady", "--scenario", str(scenario_file)]) == EXIT_USAGE


def test_build_preview(tmp_path, capsys):
    assert main(["build", "--fabric", "skybridge", "--out", str(tmp_path)]) == EXIT_OK
    stats = json.loads(capsys.readouterr().out)
    assert stats["active_voxels"] > 0 and "Si_nw" in stats["voxels_per_material"]
    assert (tmp_path / "skybridge.scenario.json").exists()
    assert (tmp_path / "skybridge.materials.vtk").exists()


def test_unwritable_output(scenario_file, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["steady", "--scenario", str(scenario_file), "--out", str(blocker / "sub")]) == EXIT_SCENARIO
