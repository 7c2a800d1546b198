import json

import numpy as np
import pytest

from malliavin_inspector.cli import MalliavinInspector, _json_default, build_parser, run
from malliavin_inspector.config import build_config
from malliavin_inspector.constants import CROSS, EXIT_ASSERTION, EXIT_OK, EXIT_USAGE, SEVERITY_CRITICAL, SUITES, WARNING


@pytest.fixture
def inspector():
    return MalliavinInspector(build_config("verify-operators", overrides={"models": 2, "seed": 3}, environ={}))


def _failing_result(severity=SEVERITY_CRITICAL):
    return {
        "MD004": {
            **SUITES["concentration"],
            "command": "concentration",
            "severity": severity,
            "passed": False,
            "value": "min_slack=-1.00e-03",
            "checks": {"efron_stein": False, "mcdiarmid": True},
            "details": {"min_slack": np.float64(-1e-3)},
            "rows": [{"model": 0, "slack": -1e-3}],
        }
    }


def test_list(capsys):
    assert run(["--list"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == len(SUITES)
    assert lines[0].startswith("MD001  verify-operators")


def test_no_command_is_usage_error(capsys):
    assert run([]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_exits_with_usage_code():
    with pytest.raises(SystemExit) as excinfo:
        run(["chaos", "--no-such-flag"])
    assert excinfo.value.code == EXIT_USAGE


def test_missing_config_file(capsys, tmp_path):
    missing = str(tmp_path / "absent.toml")
    assert run(["chaos", "--config", missing]) == EXIT_USAGE
    assert f"Error: Config file not found: {missing}" in capsys.readouterr().err


def test_missing_model_file(capsys):
    assert run(["verify-operators", "--model", "/no/such/model.json"]) == EXIT_USAGE
    assert "/no/such/model.json" in capsys.readouterr().err


def test_parser_maps_flags_to_config_fields():
    args = build_parser().parse_args(["hypergraph-motif", "--motif-file", "m.json", "--n", "10,20", "--p", "0.2"])
    assert args.motif_path == "m.json"
    assert args.ns == "10,20"
    assert args.p == 0.2


def test_run_suites_json(inspector):
    results = inspector.run_suites()
    assert list(results) == ["MD001"]
    result = results["MD001"]
    assert result["passed"]
    assert result["command"] == "verify-operators"
    assert len(result["rows"]) == 2
    data = json.loads(inspector.format_json(results))
    assert data["metadata"]["seed"] == 3
    assert data["metadata"]["wall_time"] >= 0
    assert data["results"]["MD001"]["checks"]


def test_run_suites_is_reproducible(inspector):
    first = inspector.run_suites()["MD001"]["rows"]
    second = inspector.run_suites()["MD001"]["rows"]
    assert first == second


def test_csv_format(inspector):
    text = inspector.format_csv(inspector.run_suites())
    lines = text.splitlines()
    assert lines[0].startswith("# version: ")
    header = [line for line in lines if not line.startswith("#")][0]
    assert header.split(",")[:2] == ["suite", "model"]
    assert sum(line.startswith("MD001,") for line in lines) == 2


@pytest.mark.parametrize("severity, mark", [(SEVERITY_CRITICAL, CROSS), ("EXPERIMENT", WARNING)])
def test_checklist_marks_failures(inspector, severity, mark):
    text = inspector.format_checklist(_failing_result(severity))
    assert mark in text
    assert "- Got: min_slack=-1.00e-03" in text
    assert "efron_stein" in text


def test_failure_report(inspector):
    report = json.loads(inspector.failure_report(_failing_result()))
    assert report["failures"]["MD004"]["failed_checks"] == ["efron_stein"]
    assert report["failures"]["MD004"]["details"]["min_slack"] == pytest.approx(-1e-3)
    assert inspector.failure_report({"MD001": {**_failing_result()["MD004"], "passed": True}}).count("MD001") == 0


@pytest.mark.parametrize(
    "value, expected",
    [
        (np.int64(3), 3),
        (np.float32(0.5), 0.5),
        (np.bool_(True), True),
        (np.arange(3), [0, 1, 2]),
        (object, str(object)),
    ],
)
def test_json_default(value, expected):
    assert _json_default(value) == expected


def test_run_writes_report(tmp_path, capsys):
    target = tmp_path / "report.json"
    code = run(["verify-operators", "--models", "2", "--format", "json", "--out", str(target)])
    assert code == EXIT_OK
    assert json.loads(target.read_text())["results"]["MD001"]["passed"]
    assert capsys.readouterr().out == ""


def test_assertion_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(MalliavinInspector, "run_suites", lambda self, commands=None: _failing_result())
    assert run(["concentration", "--models", "1"]) == EXIT_ASSERTION
    captured = capsys.readouterr()
    assert json.loads(captured.out)["failures"]["MD004"]["failed_checks"] == ["efron_stein"]
    assert "efron_stein" in captured.err


def test_dejong_hc_bound_flag(capsys):
    assert build_parser().parse_args(["dejong", "--hc-bound", "20"]).hc_bound == 20.0
    assert run(["dejong", "--components", "4", "--hc-bound", "1.0"]) == EXIT_USAGE
    assert "Condition HC failed" in capsys.readouterr().err
