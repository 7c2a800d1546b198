import json

import pytest

from malliavin_inspector.config import ExperimentConfig, build_config, from_environment, parse_list, read_config_file
from malliavin_inspector.exceptions import ConfigError


@pytest.mark.parametrize(
    "value, cast, expected",
    [
        ("10, 20,40", int, [10, 20, 40]),
        ("0.5,", float, [0.5]),
        ([1, "2"], int, [1, 2]),
        ("", int, []),
    ],
)
def test_parse_list(value, cast, expected):
    assert parse_list(value, cast) == expected


def test_defaults():
    config = build_config("glauber", environ={})
    assert config.command == "glauber"
    assert config.seed == 0
    assert config.workers == 1
    assert config.times == [0.5, 1.0, 1.5, 2.0]


def test_environment_overlay():
    environ = {"MALLIAVIN_SEED": "7", "MALLIAVIN_WORKERS": "3", "MALLIAVIN_OUTPUT_FORMAT": "json"}
    config = from_environment(ExperimentConfig(), environ)
    assert (config.seed, config.workers, config.output_format) == (7, 3, "json")
    assert from_environment(ExperimentConfig(), {"MALLIAVIN_SEED": ""}).seed == 0


def test_precedence(tmp_path):
    """Flags beat the config file, which beats the environment."""
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 5, "workers": 2, "ns": "10,20"}))
    environ = {"MALLIAVIN_SEED": "7", "MALLIAVIN_WORKERS": "4", "MALLIAVIN_SIZE_CAP": "1000"}
    config = build_config("clt-bernoulli", str(path), {"seed": 9, "paths": None}, environ=environ)
    assert config.seed == 9
    assert config.workers == 2
    assert config.size_cap == 1000
    assert config.ns == [10, 20]
    assert config.paths == 20000


def test_toml_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('format_version = "1.0"\nmotif = "two-edges-pair"\ntimes = [0.25, 0.5]\n')
    config = build_config("hypergraph-motif", str(path), environ={})
    assert config.motif == "two-edges-pair"
    assert config.times == [0.25, 0.5]


@pytest.mark.parametrize(
    "content, message",
    [
        ('{"seeds": 1}', "Unknown config keys"),
        ("[1, 2]", "must hold an object"),
        ("{", "Cannot parse"),
        ('{"format_version": "0.5"}', "older than"),
    ],
)
def test_bad_config_files(tmp_path, content, message):
    path = tmp_path / "run.json"
    path.write_text(content)
    with pytest.raises(ConfigError) as excinfo:
        read_config_file(str(path))
    assert message in str(excinfo.value)


def test_missing_config_file(tmp_path):
    missing = str(tmp_path / "nope.json")
    with pytest.raises(ConfigError) as excinfo:
        build_config("chaos", missing, environ={})
    assert str(excinfo.value) == f"Config file not found: {missing}"


@pytest.mark.parametrize(
    "overrides",
    [
        {"workers": 0},
        {"seed": -1},
        {"models": 0},
        {"p": 0.0},
        {"q": 1.5},
        {"statistic": "raw"},
        {"ns": "10,-1"},
        {"times": "-0.5"},
        {"output_format": "yaml"},
        {"hc_bound": 0.0},
        {"hc_bound": "loose"},
        {"model_path": "/does/not/exist.json"},
        {"workers": "many"},
    ],
)
def test_invalid_values(overrides):
    with pytest.raises(ConfigError):
        build_config("chaos", overrides=overrides, environ={})


def test_unknown_command():
    with pytest.raises(ConfigError):
        build_config("verify-everything", environ={})


def test_hc_bound_override(tmp_path):
    assert build_config("dejong", environ={}).hc_bound == 100.0
    path = tmp_path / "run.toml"
    path.write_text("hc_bound = 250.0\n")
    assert build_config("dejong", str(path), environ={}).hc_bound == 250.0
    assert build_config("dejong", str(path), {"hc_bound": "50"}, environ={}).hc_bound == 50.0
