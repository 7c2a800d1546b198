import logging
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Optional

from malliavin_inspector.config import ExperimentConfig
from malliavin_inspector.constants import SUITES
from malliavin_inspector.models import ProductModel, load_model

logger = logging.getLogger(__name__)


class BaseSuite(ABC):
    """Base class for all acceptance suites.

    Subclasses set `command`; code, category, severity, description and recommendation
    are filled in from the SUITES table.
    """

    # Static attributes that must be defined by subclasses
    command: str = ""
    code: str = ""
    category: str = ""
    severity: str = ""
    description: str = ""
    recommendation: str = ""

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        info = SUITES.get(cls.command)
        if info is None:
            raise TypeError(f"{cls.__name__} names unknown command '{cls.command}'")
        for key, value in info.items():
            setattr(cls, key, value)

    @classmethod
    def get_info(cls) -> Dict:
        """Get suite information as a dictionary.

        Returns:
            dict: Dictionary containing suite information with keys:
                - command: str
                - code: str
                - category: str
                - severity: str
                - description: str
                - recommendation: str
        """
        return {
            "command": cls.command,
            "code": cls.code,
            "category": cls.category,
            "severity": cls.severity,
            "description": cls.description,
            "recommendation": cls.recommendation,
        }

    @classmethod
    @abstractmethod
    def run(cls, config: ExperimentConfig) -> dict:
        """Run the suite.

        Args:
            config: Validated experiment configuration

        Returns:
            dict: Dictionary containing the suite result with keys:
                - passed: bool
                - value: str, one-line summary of the measured quantities
                - checks: dict of check name to bool
                - details: dict of scalar findings
                - rows: list of flat dicts, one per table row
        """
        raise NotImplementedError("Subclasses must implement this method")

    @classmethod
    def load_model_or(cls, config: ExperimentConfig, fallback: Callable[[], ProductModel]) -> ProductModel:
        """Model from --model when given, else the suite's default model."""
        if config.model_path:
            logger.info("Loading model descriptor %s", config.model_path)
            return load_model(config.model_path, size_cap=config.size_cap)
        return fallback()

    @staticmethod
    def result(
        checks: Dict[str, bool],
        value: str,
        details: Optional[Dict[str, Any]] = None,
        rows: Optional[List[Dict[str, Any]]] = None,
    ) -> dict:
        return {
            "passed": all(checks.values()),
            "value": value,
            "checks": checks,
            "details": details or {},
            "rows": rows or [],
        }
