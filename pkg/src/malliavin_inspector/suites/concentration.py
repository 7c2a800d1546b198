import logging
from functools import partial

import numpy as np

from malliavin_inspector.concentration import (
    covariance_quadrature,
    covariance_residual,
    efron_stein_check,
    mcdiarmid_check,
    spectral_efron_stein,
)
from malliavin_inspector.config import ExperimentConfig
from malliavin_inspector.constants import TOL_PIPELINE, TOL_QUADRATURE
from malliavin_inspector.models import conditional_covariance, conditional_variance, random_functional, random_model
from malliavin_inspector.operators import chaos_projector
from malliavin_inspector.utils import make_rng

from .base import BaseSuite

logger = logging.getLogger(__name__)

MCDIARMID_FUNCTIONALS = 20
QUADRATURE_PAIRS = 10


class ConcentrationSuite(BaseSuite):
    """Covariance identity, Efron-Stein (plain and spectral) and McDiarmid."""

    command = "concentration"

    @classmethod
    def run(cls, config: ExperimentConfig) -> dict:
        rng = make_rng(config.seed)
        covariance = 0.0
        quadrature = 0.0
        spectral = 0.0
        equality = 0.0
        efron_stein_slack = np.inf
        mcdiarmid_slack = np.inf
        rows = []
        for i in range(config.models):
            model = cls.load_model_or(config, partial(random_model, rng))
            F = random_functional(model, rng)
            G = random_functional(model, rng)
            covariance = max(covariance, covariance_residual(F, G))
            if i < QUADRATURE_PAIRS:
                direct = conditional_covariance(F, G)
                quadrature = max(quadrature, float(np.max(np.abs(covariance_quadrature(F, G) - direct))))
            report = efron_stein_check(F)
            efron_stein_slack = min(efron_stein_slack, report.min_slack)
            spectral = max(spectral, float(np.max(np.abs(spectral_efron_stein(F) - conditional_variance(F)))))
            # Pure chaos: Var = E[Gamma] / p
            p = int(rng.integers(1, model.n_components + 1))
            pure = efron_stein_check(chaos_projector(F, p))
            equality = max(equality, pure.metadata.get("equality_residual", 0.0))
            row = {"model": i, "components": model.n_components, "efron_stein_slack": report.min_slack}
            if i < MCDIARMID_FUNCTIONALS:
                tails = mcdiarmid_check(F, config.thresholds)
                mcdiarmid_slack = min(mcdiarmid_slack, tails.min_slack)
                row["mcdiarmid_slack"] = tails.min_slack
            rows.append(row)

        checks = {
            "covariance_identity": covariance < TOL_PIPELINE,
            "covariance_quadrature": quadrature < TOL_QUADRATURE,
            "efron_stein": efron_stein_slack >= -TOL_PIPELINE,
            "spectral_efron_stein": spectral < TOL_PIPELINE,
            "pure_chaos_equality": equality < TOL_PIPELINE,
            "mcdiarmid": mcdiarmid_slack >= -TOL_PIPELINE,
        }
        details = {
            "covariance_residual": covariance,
            "quadrature_residual": quadrature,
            "spectral_residual": spectral,
            "equality_residual": equality,
            "efron_stein_min_slack": float(efron_stein_slack),
            "mcdiarmid_min_slack": float(mcdiarmid_slack),
            "thresholds": list(config.thresholds),
        }
        value = (
            f"cov={covariance:.2e}, quad={quadrature:.2e}, ES slack={efron_stein_slack:.3e}, "
            f"McDiarmid slack={mcdiarmid_slack:.3e}"
        )
        return cls.result(checks, value, details=details, rows=rows)
