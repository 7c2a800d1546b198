import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Dict, List, Mapping, Optional

import pytoml
from dotenv import load_dotenv

from malliavin_inspector.constants import (
    DEFAULT_SIZE_CAP,
    ENV_OUTPUT_FORMAT,
    ENV_SEED,
    ENV_SIZE_CAP,
    ENV_WORKERS,
    FORMAT_CHECKLIST,
    HC_BOUND,
    MIN_DESCRIPTOR_VERSION,
    OUTPUT_FORMATS,
    STATISTIC_TILDE,
    STATISTICS,
    SUITES,
)
from malliavin_inspector.exceptions import ConfigError
from malliavin_inspector.utils import is_version_supported

logger = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    """Everything a suite needs to run reproducibly.

    Precedence, lowest first: defaults, environment (and .env), config file, CLI flags.
    """

    command: str = ""
    model_path: Optional[str] = None
    motif: str = "single-edge"
    motif_path: Optional[str] = None
    models: int = 100
    ns: Optional[List[int]] = None
    components: List[int] = field(default_factory=lambda: [6, 10, 14])
    p: float = 0.3
    q: float = 1.0
    times: List[float] = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])
    paths: int = 20000
    samples: Optional[int] = None
    thresholds: List[float] = field(default_factory=lambda: [0.5, 1.0, 2.0])
    hc_bound: float = HC_BOUND
    statistic: str = STATISTIC_TILDE
    seed: int = 0
    workers: int = 1
    size_cap: int = DEFAULT_SIZE_CAP
    out: Optional[str] = None
    output_format: str = FORMAT_CHECKLIST
    dump_paths: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def validate(self) -> None:
        """Check ranges and that every input path exists.

        Raises:
            ConfigError: On the first invalid entry
        """
        if self.command and self.command not in SUITES:
            raise ConfigError(f"Unknown command '{self.command}'. Available: {', '.join(SUITES)}")
        for name in ("model_path", "motif_path"):
            path = getattr(self, name)
            if path and not os.path.isfile(path):
                raise ConfigError(f"File not found: {path}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        for name in ("models", "paths", "samples", "size_cap"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not 0.0 < self.p <= 1.0 or not 0.0 < self.q <= 1.0:
            raise ConfigError(f"p and q must lie in (0, 1], got p={self.p}, q={self.q}")
        if self.statistic not in STATISTICS:
            raise ConfigError(f"Unknown statistic '{self.statistic}'. Available: {', '.join(STATISTICS)}")
        if any(n < 1 for n in self.ns or ()) or any(n < 1 for n in self.components):
            raise ConfigError("Sizes in ns and components must be positive")
        if any(t < 0 for t in self.times):
            raise ConfigError("times must be non-negative")
        if not self.hc_bound > 0:
            raise ConfigError(f"hc_bound must be positive, got {self.hc_bound}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"Unknown format '{self.output_format}'. Available: {', '.join(OUTPUT_FORMATS)}")


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}
_INT_LISTS = {"ns", "components"}
_FLOAT_LISTS = {"times", "thresholds"}
_INTS = {"models", "paths", "samples", "seed", "workers", "size_cap"}
_FLOATS = {"p", "q", "hc_bound"}


def parse_list(value: Any, cast: Callable[[Any], Any]) -> List[Any]:
    """Comma-separated string or sequence to a list of cast values."""
    if isinstance(value, str):
        value = [item.strip() for item in value.split(",") if item.strip()]
    return [cast(item) for item in value]


def _coerce(name: str, value: Any) -> Any:
    try:
        if name in _INT_LISTS:
            return parse_list(value, int)
        if name in _FLOAT_LISTS:
            return parse_list(value, float)
        if name in _INTS:
            return int(value)
        if name in _FLOATS:
            return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value for {name}: {value!r}") from e
    return value


def from_environment(config: ExperimentConfig, environ: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Overlay MALLIAVIN_* environment variables, reading a .env file first."""
    if environ is None:
        load_dotenv()
        environ = os.environ
    updates: Dict[str, Any] = {}
    for variable, name in ((ENV_SEED, "seed"), (ENV_WORKERS, "workers"), (ENV_SIZE_CAP, "size_cap")):
        if environ.get(variable):
            updates[name] = _coerce(name, environ[variable])
    if environ.get(ENV_OUTPUT_FORMAT):
        updates["output_format"] = environ[ENV_OUTPUT_FORMAT]
    return replace(config, **updates)


def read_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON or TOML (by suffix) config file mirroring ExperimentConfig.

    Raises:
        ConfigError: When the file is missing, unreadable or has unknown keys
    """
    if not os.path.isfile(path):
        raise ConfigError(f"Config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = pytoml.load(f) if path.endswith(".toml") else json.load(f)
        except (json.JSONDecodeError, pytoml.TomlError) as e:
            raise ConfigError(f"Cannot parse config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold an object")
    format_version = data.pop("format_version", None)
    if format_version is not None and not is_version_supported(str(format_version), MIN_DESCRIPTOR_VERSION):
        raise ConfigError(f"Config format_version {format_version!r} is older than {MIN_DESCRIPTOR_VERSION}")
    unknown = sorted(set(data) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"Unknown config keys in {path}: {', '.join(unknown)}")
    return data


def build_config(
    command: str,
    config_path: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """Assemble and validate the configuration for one command."""
    config = from_environment(ExperimentConfig(command=command), environ)
    if config_path:
        file_values = read_config_file(config_path)
        config = replace(config, **{name: _coerce(name, value) for name, value in file_values.items()})
    if overrides:
        updates = {name: _coerce(name, value) for name, value in overrides.items() if value is not None}
        config = replace(config, **updates)
    config.validate()
    logger.debug("Configuration: %s", config.to_dict())
    return config
