import logging
from typing import Iterator, Tuple

import numpy as np

from .base import ProductModel

logger = logging.getLogger(__name__)


def enumerate_configurations(
    model: ProductModel,
    with_indices: bool = False,
) -> Iterator[Tuple[int, np.ndarray, float]]:
    """Enumerate every (latent index, configuration, joint probability).

    Latent states are the outer loop; within a latent state configurations follow the
    mixed-radix order with component 0 varying fastest.

    Args:
        model: The product model
        with_indices: Yield value indices instead of values

    Raises:
        SizeCapExceeded: When the number of cells exceeds the model's cap
    """
    model.check_size()
    joint = model.joint
    sizes = [component.size for component in model.components]
    for latent in range(model.n_latent):
        for flat in range(model.total_configurations):
            config = np.array(np.unravel_index(flat, sizes, order="F"), dtype=int)
            probability = float(joint[(latent,) + tuple(config)])
            if with_indices:
                yield latent, config, probability
            else:
                values = np.array([component.values[i] for component, i in zip(model.components, config)])
                yield latent, values, probability


def _draw_categorical(rng: np.random.Generator, pmf_rows: np.ndarray) -> np.ndarray:
    """One categorical draw per row of pmf_rows by inverse CDF."""
    cdf = np.cumsum(pmf_rows, axis=-1)
    u = rng.random(pmf_rows.shape[0])
    draws = (u[:, None] >= cdf).sum(axis=-1)
    return np.minimum(draws, pmf_rows.shape[-1] - 1)


def sample_latent(model: ProductModel, rng: np.random.Generator, size: int) -> np.ndarray:
    return _draw_categorical(rng, np.broadcast_to(model.latent.probs, (size, model.n_latent)))


def sample_components(model: ProductModel, latent: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw every coordinate given the latent states; returns value indices of shape (size, m)."""
    latent = np.asarray(latent, dtype=int).reshape(-1)
    columns = [_draw_categorical(rng, component.cond_pmf[latent]) for component in model.components]
    return np.stack(columns, axis=1) if columns else np.empty((latent.size, 0), dtype=int)


def sample_configurations(model: ProductModel, rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised draws of (latent index, configuration value indices)."""
    latent = sample_latent(model, rng, size)
    return latent, sample_components(model, latent, rng)


def sample_configuration(model: ProductModel, rng: np.random.Generator) -> Tuple[int, np.ndarray]:
    """Draw Z from the latent law, then every X_a from cond_pmf[Z].

    Returns:
        (latent index, configuration as value indices)
    """
    latent, config = sample_configurations(model, rng, 1)
    return int(latent[0]), config[0]


def configuration_values(model: ProductModel, config: np.ndarray) -> np.ndarray:
    """Map value indices (..., m) to outcome values."""
    config = np.asarray(config, dtype=int)
    columns = [component.values[config[..., i]] for i, component in enumerate(model.components)]
    return np.stack(columns, axis=-1)


def evaluate(table: np.ndarray, latent: np.ndarray, config: np.ndarray) -> np.ndarray:
    """Evaluate a dense table at sampled cells."""
    config = np.asarray(config, dtype=int)
    index = (np.asarray(latent, dtype=int),) + tuple(config[..., i] for i in range(config.shape[-1]))
    return table[index]
