from typing import Optional, Sequence

import numpy as np

from .base import ComponentSpace, LatentSpace, ProductModel
from .functional import Functional, SimpleProcess


def conditional_bernoulli(
    n: int,
    latent_values: Sequence[float] = (0.3, 0.7),
    latent_probs: Optional[Sequence[float]] = None,
    start_index: int = 1,
) -> ProductModel:
    """n coordinates X_i | Z ~ Bernoulli(Z), Z drawn from latent_values.

    Args:
        n: Number of coordinates
        latent_values: Success probabilities, used as latent payloads
        latent_probs: Law of Z (uniform by default)
        start_index: Label of the first coordinate
    """
    z = np.asarray(latent_values, dtype=float)
    probs = np.full(z.size, 1.0 / z.size) if latent_probs is None else np.asarray(latent_probs, dtype=float)
    latent = LatentSpace(probs=probs, labels=tuple(float(v) for v in z), payloads=z)
    pmf = np.stack([1.0 - z, z], axis=1)
    components = tuple(ComponentSpace(index=start_index + i, values=[0.0, 1.0], cond_pmf=pmf) for i in range(n))
    return ProductModel(latent=latent, components=components, name=f"conditional-bernoulli-{n}")


def cm1() -> ProductModel:
    """Z in {0.3, 0.7} each with probability 1/2, A = {1, 2, 3}, X_a | Z ~ Bernoulli(Z)."""
    model = conditional_bernoulli(3, latent_values=(0.3, 0.7))
    return ProductModel(latent=model.latent, components=model.components, name="CM1")


def rademacher_like(
    n: int,
    scales: Sequence[float] = (1.0,),
    latent_probs: Optional[Sequence[float]] = None,
) -> ProductModel:
    """Symmetric coordinates X_i | Z uniform on {-s_Z, +s_Z}.

    With a single scale of 1 these are i.i.d. Rademacher signs.
    """
    scales = np.asarray(scales, dtype=float)
    probs = np.full(scales.size, 1.0 / scales.size) if latent_probs is None else np.asarray(latent_probs)
    latent = LatentSpace(probs=probs, payloads=scales)
    if scales.size == 1:
        components = tuple(
            ComponentSpace(index=i + 1, values=[-scales[0], scales[0]], cond_pmf=[[0.5, 0.5]]) for i in range(n)
        )
        return ProductModel(latent=latent, components=components, name=f"rademacher-{n}")
    # Union of supports; each latent state charges its own pair
    values = np.unique(np.concatenate([-scales, scales]))
    pmf = np.zeros((scales.size, values.size))
    for z, s in enumerate(scales):
        pmf[z, np.searchsorted(values, -s)] += 0.5
        pmf[z, np.searchsorted(values, s)] += 0.5
    components = tuple(ComponentSpace(index=i + 1, values=values, cond_pmf=pmf) for i in range(n))
    return ProductModel(latent=latent, components=components, name=f"rademacher-like-{n}")


def random_model(
    rng: np.random.Generator,
    max_components: int = 6,
    max_values: int = 3,
    max_latent: int = 3,
    min_components: int = 1,
) -> ProductModel:
    """A random finite conditional-product model with strictly positive pmfs."""
    n_latent = int(rng.integers(1, max_latent + 1))
    n_components = int(rng.integers(min_components, max_components + 1))
    latent_probs = rng.dirichlet(np.ones(n_latent))
    latent = LatentSpace(probs=latent_probs / latent_probs.sum(), payloads=rng.random(n_latent))
    components = []
    for i in range(n_components):
        n_values = int(rng.integers(2, max_values + 1))
        values = np.sort(rng.choice(np.arange(-5, 6), size=n_values, replace=False)).astype(float)
        pmf = rng.dirichlet(np.ones(n_values), size=n_latent) + 0.05
        pmf = pmf / pmf.sum(axis=1, keepdims=True)
        components.append(ComponentSpace(index=i + 1, values=values, cond_pmf=pmf))
    return ProductModel(latent=latent, components=tuple(components), name="random")


def point_mass_model(values: Sequence[float]) -> ProductModel:
    """Degenerate model: coordinate i equals values[i] with probability one."""
    latent = LatentSpace.deterministic()
    components = tuple(
        ComponentSpace(index=i + 1, values=[v, v + 1.0], cond_pmf=[[1.0, 0.0]]) for i, v in enumerate(values)
    )
    return ProductModel(latent=latent, components=components, name="point-mass")


def random_functional(model: ProductModel, rng: np.random.Generator, scale: float = 1.0) -> Functional:
    """A functional with independent N(0, scale^2) values on every cell."""
    return Functional(model, scale * rng.standard_normal(model.shape))


def random_process(model: ProductModel, rng: np.random.Generator) -> SimpleProcess:
    return SimpleProcess(model, {a: random_functional(model, rng) for a in model.indices})
