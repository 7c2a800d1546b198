import logging
import math
from functools import partial
from itertools import combinations
from typing import Dict, Hashable, List, Sequence, Tuple

import numpy as np

from malliavin_inspector.config import ExperimentConfig
from malliavin_inspector.constants import TOL_PIPELINE
from malliavin_inspector.models import Functional, ProductModel, conditional_bernoulli, expectation, rademacher_like
from malliavin_inspector.ustat import (
    DegenerateUStat,
    HomogeneousSum,
    build_homogeneous_sum,
    connected_sum,
    dejong_quantities,
    fourth_moment_report,
    hermite_identity,
    hoeffding_decompose,
    sandwich_check,
)
from malliavin_inspector.utils import make_rng

from .base import BaseSuite

logger = logging.getLogger(__name__)

FOURTH_MOMENT_MODELS = 50
MAX_ORDER = 3
MAX_COMPONENTS = 6
MAX_SUPPORTS = 6
TOL_HERMITE = 1e-9
DISJOINT_PAIRS_COMPONENTS = 8

Components = Dict[Tuple[Hashable, ...], DegenerateUStat]


def random_chaos_functional(
    model: ProductModel,
    order: int,
    supports: int,
    rng: np.random.Generator,
) -> Tuple[Functional, Components, float]:
    """Standardized top chaos of a random homogeneous sum, with its Hoeffding terms.

    Returns:
        (F, components, reconstruction residual of the Hoeffding decomposition)
    """
    candidates = list(combinations(model.indices, order))
    chosen = rng.choice(len(candidates), size=min(supports, len(candidates)), replace=False)
    spec = HomogeneousSum(
        degree=order,
        coefficients={candidates[k]: rng.standard_normal(model.n_latent) for k in sorted(chosen)},
    )
    W = build_homogeneous_sum(model, spec)
    decomposition = hoeffding_decompose(W)
    residual = (decomposition.reconstruct() - W).max_abs()
    F = decomposition.chaos(order)
    scale = math.sqrt(expectation(F * F))
    components = {
        support: DegenerateUStat.product(model, support, term.weight / scale)
        for support, term in decomposition.items()
        if len(support) == order
    }
    return F / scale, components, residual


def degeneracy(components: Components) -> float:
    """Largest |E[W_I | G_K]| over the maximal proper subsets K of each support."""
    worst = 0.0
    for support, term in components.items():
        for keep in combinations(support, len(support) - 1):
            worst = max(worst, term.degeneracy_residual(keep))
    return worst


def _random_model(rng: np.random.Generator, order: int, i: int) -> ProductModel:
    n = int(rng.integers(order + 1, MAX_COMPONENTS + 1))
    if i % 2:
        return rademacher_like(n, scales=(1.0, 2.0))
    return conditional_bernoulli(n, (0.3, 0.7))


class FourthMomentSuite(BaseSuite):
    """Fourth-moment inequality, influence lemma, Hermite identity and sandwich on chaos functionals."""

    command = "fourth-moment"

    @classmethod
    def run(cls, config: ExperimentConfig) -> dict:
        rng = make_rng(config.seed)
        rows = []
        worst = {"hoeffding": 0.0, "degeneracy": 0.0, "hermite": 0.0}
        flags = {"proposition": True, "influence": True, "sandwich_lower": True, "sandwich_upper": True}
        for i in range(min(config.models, FOURTH_MOMENT_MODELS)):
            order = int(rng.integers(1, MAX_ORDER + 1))
            model = cls.load_model_or(config, partial(_random_model, rng, order, i))
            order = min(order, model.n_components)
            supports = int(rng.integers(1, MAX_SUPPORTS + 1))
            F, components, residual = random_chaos_functional(model, order, supports, rng)
            report = fourth_moment_report(F, components, workers=config.workers)
            hermite = hermite_identity(F, order)
            square = F * F - 1.0
            lower = sandwich_check(square, 2 * order, 2 * order)
            upper = sandwich_check(square, 2 * order + 1, 2 * order)

            worst["hoeffding"] = max(worst["hoeffding"], residual)
            worst["degeneracy"] = max(worst["degeneracy"], degeneracy(components))
            worst["hermite"] = max(worst["hermite"], hermite.residual)
            flags["proposition"] = flags["proposition"] and bool(report.proposition_holds)
            flags["influence"] = flags["influence"] and report.influence_holds
            flags["sandwich_lower"] = flags["sandwich_lower"] and lower.lower_holds
            flags["sandwich_upper"] = flags["sandwich_upper"] and bool(upper.upper_holds)
            rows.append(
                {
                    "model": i,
                    "name": model.name,
                    "supports": len(components),
                    "hermite_residual": hermite.residual,
                    **report.to_dict(),
                }
            )

        checks = dict(flags)
        checks["hoeffding_reconstruction"] = worst["hoeffding"] < TOL_PIPELINE
        checks["degeneracy"] = worst["degeneracy"] < TOL_PIPELINE
        checks["hermite_identity"] = worst["hermite"] < TOL_HERMITE
        value = ", ".join(f"{name}={value:.2e}" for name, value in worst.items())
        return cls.result(checks, value, details={"max_residuals": worst}, rows=rows)


def standardized_linear(model: ProductModel) -> Tuple[Functional, List[DegenerateUStat]]:
    """sum_i Y_i / sqrt(E[sum_i Var(X_i | Z)]) with one first-order term per coordinate."""
    variances = sum(component.conditional_central_moment(2) for component in model.components)
    weight = 1.0 / math.sqrt(float(model.latent.probs @ variances))
    return _assemble(model, [(a,) for a in model.indices], weight)


def disjoint_pairs(model: ProductModel) -> Tuple[Functional, List[DegenerateUStat]]:
    """Standardized second-chaos sum over the disjoint pairs (1, 2), (3, 4), ..."""
    indices = model.indices
    supports = [tuple(indices[k : k + 2]) for k in range(0, len(indices) - 1, 2)]
    F, _ = _assemble(model, supports, 1.0)
    return _assemble(model, supports, 1.0 / math.sqrt(expectation(F * F)))


def _assemble(
    model: ProductModel,
    supports: Sequence[Tuple[Hashable, ...]],
    weight: float,
) -> Tuple[Functional, List[DegenerateUStat]]:
    components = [DegenerateUStat.product(model, support, weight) for support in supports]
    F = model.constant(0.0)
    for component in components:
        F = F + component.kernel
    return F, components


class DeJongSuite(BaseSuite):
    """De Jong quantities along a growing number of components."""

    command = "dejong"

    @classmethod
    def run(cls, config: ExperimentConfig) -> dict:
        rows = []
        for n in config.components:
            model = conditional_bernoulli(n, (0.3, 0.7))
            F, components = standardized_linear(model)
            quantities = dejong_quantities(
                F, components, strict=True, workers=config.workers, hc_bound=config.hc_bound
            )
            rows.append({"n": n, **quantities.to_dict()})
            logger.info(
                "De Jong n=%d: gap=%.4e connected=%.4e", n, quantities.fourth_moment_gap, quantities.connected_sum
            )

        gaps = [row["fourth_moment_gap"] for row in rows]
        checks = {"gap_decreasing": all(later < earlier for earlier, later in zip(gaps, gaps[1:]))}

        model = conditional_bernoulli(DISJOINT_PAIRS_COMPONENTS, (0.3, 0.7))
        F, components = disjoint_pairs(model)
        fourth_powers = sum(expectation(component.kernel**4) for component in components)
        connected = connected_sum(components, workers=config.workers)
        quantities = dejong_quantities(F, components, strict=True, workers=config.workers, hc_bound=config.hc_bound)
        checks["disjoint_pairs"] = abs(connected - fourth_powers) <= TOL_PIPELINE
        details = {
            "disjoint_pairs": {
                "connected_sum": connected,
                "sum_fourth_powers": fourth_powers,
                **quantities.to_dict(),
            }
        }
        value = ", ".join(f"n={row['n']}: gap={row['fourth_moment_gap']:.3e}" for row in rows)
        return cls.result(checks, value, details=details, rows=rows)
