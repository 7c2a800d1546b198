import numpy as np
import pytest

from malliavin_inspector.models import cm1, random_functional, random_model
from malliavin_inspector.utils import make_rng


@pytest.fixture
def rng():
    """Fixed counter-based stream so every test sees the same draws."""
    return make_rng(12345)


@pytest.fixture
def cm1_model():
    return cm1()


@pytest.fixture
def small_models(rng):
    """A handful of random models with up to four coordinates and three latent states."""
    return [random_model(rng, max_components=4) for _ in range(5)]


@pytest.fixture
def functional_pair(rng):
    """(F, G) on one random model with at least two coordinates."""
    model = random_model(rng, max_components=4, min_components=2)
    return random_functional(model, rng), random_functional(model, rng)
