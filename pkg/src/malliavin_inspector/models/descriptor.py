import json
import logging
import os
from numbers import Real
from typing import Any, Dict, Mapping, Union

import numpy as np

from malliavin_inspector.constants import DEFAULT_SIZE_CAP, DESCRIPTOR_FORMAT_VERSION, MIN_DESCRIPTOR_VERSION
from malliavin_inspector.exceptions import ConfigError, DescriptorError
from malliavin_inspector.utils import is_version_supported

from .base import ComponentSpace, LatentSpace, ProductModel

logger = logging.getLogger(__name__)


def _number_list(data: Any, path: str) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise DescriptorError(path, "expected a non-empty list of numbers")
    for i, item in enumerate(data):
        if isinstance(item, bool) or not isinstance(item, Real):
            raise DescriptorError(f"{path}[{i}]", f"expected a number, got {item!r}")
    return np.asarray(data, dtype=float)


def _matrix(data: Any, path: str, rows: int, cols: int) -> np.ndarray:
    if not isinstance(data, list) or len(data) != rows:
        raise DescriptorError(path, f"expected {rows} rows (one per latent state)")
    matrix = []
    for r, row in enumerate(data):
        values = _number_list(row, f"{path}[{r}]")
        if values.size != cols:
            raise DescriptorError(f"{path}[{r}]", f"expected {cols} entries, got {values.size}")
        matrix.append(values)
    return np.stack(matrix)


def _reraise_under(prefix: str, error: DescriptorError) -> DescriptorError:
    return DescriptorError(f"{prefix}.{error.path}" if error.path else prefix, str(error).split(": ", 1)[-1])


def model_from_dict(data: Mapping[str, Any], size_cap: int = DEFAULT_SIZE_CAP) -> ProductModel:
    """Build and validate a ProductModel from its JSON descriptor.

    The descriptor reads
    ``{"latent": {"probs": [...], "labels": [...]}, "components": [{"values": [...], "cond_pmf": [[...], ...]}]}``.
    Validation stops at the first violation and reports its path.

    Raises:
        DescriptorError: With the path of the first violation
    """
    if not isinstance(data, Mapping):
        raise DescriptorError("", "descriptor must be a JSON object")
    format_version = data.get("format_version")
    if format_version is not None and not is_version_supported(str(format_version), MIN_DESCRIPTOR_VERSION):
        raise DescriptorError("format_version", f"{format_version!r} is older than {MIN_DESCRIPTOR_VERSION}")

    latent_data = data.get("latent")
    if not isinstance(latent_data, Mapping):
        raise DescriptorError("latent", "missing latent object")
    probs = _number_list(latent_data.get("probs"), "latent.probs")
    labels = latent_data.get("labels") or ()
    payloads = latent_data.get("payloads")
    if payloads is not None:
        payloads = _number_list(payloads, "latent.payloads")
    latent = LatentSpace(probs=probs, labels=tuple(labels), payloads=payloads)

    components_data = data.get("components")
    if not isinstance(components_data, list) or not components_data:
        raise DescriptorError("components", "expected a non-empty list of components")
    components = []
    for i, entry in enumerate(components_data):
        path = f"components[{i}]"
        if not isinstance(entry, Mapping):
            raise DescriptorError(path, "expected an object")
        values = _number_list(entry.get("values"), f"{path}.values")
        cond_pmf = _matrix(entry.get("cond_pmf"), f"{path}.cond_pmf", latent.size, values.size)
        try:
            components.append(ComponentSpace(index=entry.get("index", i + 1), values=values, cond_pmf=cond_pmf))
        except DescriptorError as e:
            raise _reraise_under(path, e) from e

    model = ProductModel(latent=latent, components=tuple(components), size_cap=size_cap, name=data.get("name", ""))
    logger.debug("Loaded model descriptor: %s", model.describe())
    return model


def load_model(path: str, size_cap: int = DEFAULT_SIZE_CAP) -> ProductModel:
    """Read a JSON model descriptor from disk."""
    if not os.path.isfile(path):
        raise ConfigError(f"Model descriptor not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise DescriptorError("", f"{path} is not valid JSON: {e}") from e
    return model_from_dict(data, size_cap=size_cap)


def model_to_dict(model: ProductModel) -> Dict[str, Any]:
    latent: Dict[str, Union[list, Any]] = {"probs": model.latent.probs.tolist(), "labels": list(model.latent.labels)}
    if model.latent.payloads is not None:
        latent["payloads"] = model.latent.payloads.tolist()
    return {
        "format_version": DESCRIPTOR_FORMAT_VERSION,
        "name": model.name,
        "latent": latent,
        "components": [
            {"index": component.index, "values": component.values.tolist(), "cond_pmf": component.cond_pmf.tolist()}
            for component in model.components
        ],
    }
