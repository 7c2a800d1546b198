import logging
from functools import partial
from typing import Dict

import numpy as np

from malliavin_inspector.config import ExperimentConfig
from malliavin_inspector.constants import TOL_OPERATOR, TOL_PIPELINE, TOL_QUADRATURE
from malliavin_inspector.models import (
    Functional,
    ProductModel,
    center_given_latent,
    conditional_expectation_given_Z,
    random_functional,
    random_model,
    random_process,
)
from malliavin_inspector.operators import (
    chaos_decompose,
    chaos_projector,
    chaos_projector_composition,
    commutation_residual,
    generator_L,
    inverse_L,
    inverse_L_quadrature,
    iterated_gradient,
    iterated_gradient_mobius,
    operator_residuals,
)
from malliavin_inspector.utils import make_rng

from .base import BaseSuite

logger = logging.getLogger(__name__)

COMMUTATION_TIME = 0.7


def _update(worst: Dict[str, float], residuals: Dict[str, float]) -> None:
    for name, value in residuals.items():
        worst[name] = max(worst.get(name, 0.0), value)


def _summary(worst: Dict[str, float]) -> str:
    return ", ".join(f"{name}={value:.2e}" for name, value in worst.items())


class OperatorSuite(BaseSuite):
    """Gradient identities and integration by parts on random models."""

    command = "verify-operators"

    @classmethod
    def run(cls, config: ExperimentConfig) -> dict:
        rng = make_rng(config.seed)
        worst: Dict[str, float] = {}
        rows = []
        for i in range(config.models):
            model = cls.load_model_or(config, partial(random_model, rng))
            F = random_functional(model, rng)
            U = random_process(model, rng)
            residuals = operator_residuals(F, U, tol=TOL_OPERATOR)
            _update(worst, residuals)
            rows.append({"model": i, "components": model.n_components, "latent": model.n_latent, **residuals})
        logger.info("Operator residuals over %d models: %s", config.models, worst)
        checks = {name: value < TOL_OPERATOR for name, value in worst.items()}
        return cls.result(checks, _summary(worst), details={"max_residuals": worst}, rows=rows)


def chaos_residuals(F: Functional) -> Dict[str, float]:
    """Largest residuals of the chaos decomposition identities for one functional."""
    model = F.model
    decomposition = chaos_decompose(F)
    components = decomposition.components
    residuals = {"reconstruction": (decomposition.reconstruct() - F).max_abs()}
    idempotence = 0.0
    eigen = 0.0
    orthogonality = 0.0
    projectors = 0.0
    for n, component in enumerate(components):
        idempotence = max(idempotence, (chaos_projector(component, n) - component).max_abs())
        eigen = max(eigen, (generator_L(component) + n * component).max_abs())
        projectors = max(projectors, (chaos_projector_composition(F, n) - component).max_abs())
        for other in components[n + 1 :]:
            cross = conditional_expectation_given_Z(component * other)
            orthogonality = max(orthogonality, float(np.max(np.abs(cross))))
    residuals.update(
        {
            "idempotence": idempotence,
            "orthogonality": orthogonality,
            "eigen_relation": eigen,
            "projector_composition": projectors,
        }
    )
    centered = center_given_latent(F)
    potential = inverse_L(centered)
    residuals["inverse"] = (generator_L(potential) - centered).max_abs()
    residuals["inverse_quadrature"] = (inverse_L_quadrature(centered) - potential).max_abs()
    indices = model.indices
    residuals["mobius"] = (iterated_gradient(F, indices) - iterated_gradient_mobius(F, indices)).max_abs()
    residuals["commutation"] = max(commutation_residual(F, a, COMMUTATION_TIME) for a in indices)
    return residuals


CHAOS_TOLERANCES = {
    "reconstruction": TOL_PIPELINE,
    "idempotence": TOL_PIPELINE,
    "orthogonality": TOL_PIPELINE,
    "eigen_relation": TOL_PIPELINE,
    "projector_composition": TOL_OPERATOR,
    "inverse": TOL_PIPELINE,
    "inverse_quadrature": TOL_QUADRATURE,
    "mobius": TOL_OPERATOR,
    "commutation": TOL_PIPELINE,
}


class ChaosSuite(BaseSuite):
    """Projectors, the inverse generator and the commutation relation."""

    command = "chaos"

    @classmethod
    def run(cls, config: ExperimentConfig) -> dict:
        rng = make_rng(config.seed)
        worst: Dict[str, float] = {}
        rows = []
        for i in range(config.models):
            model: ProductModel = cls.load_model_or(config, partial(random_model, rng))
            residuals = chaos_residuals(random_functional(model, rng))
            _update(worst, residuals)
            rows.append({"model": i, "components": model.n_components, **residuals})
        checks = {name: worst[name] < tol for name, tol in CHAOS_TOLERANCES.items()}
        return cls.result(checks, _summary(worst), details={"max_residuals": worst}, rows=rows)
