from .base import ComponentSpace, LatentSpace, ProductModel
from .functional import (
    Functional,
    SimpleProcess,
    center_given_latent,
    conditional_covariance,
    conditional_expectation_given_Z,
    conditional_variance,
    expectation,
    variance,
)
from .sampling import enumerate_configurations, sample_configuration, sample_configurations
from .descriptor import load_model, model_from_dict, model_to_dict
from .presets import (
    cm1,
    conditional_bernoulli,
    point_mass_model,
    rademacher_like,
    random_functional,
    random_model,
    random_process,
)


__all__ = [
    "ComponentSpace",
    "LatentSpace",
    "ProductModel",
    "Functional",
    "SimpleProcess",
    "center_given_latent",
    "conditional_covariance",
    "conditional_expectation_given_Z",
    "conditional_variance",
    "expectation",
    "variance",
    "enumerate_configurations",
    "sample_configuration",
    "sample_configurations",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "cm1",
    "conditional_bernoulli",
    "point_mass_model",
    "rademacher_like",
    "random_functional",
    "random_model",
    "random_process",
]
