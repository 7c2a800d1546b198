import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import integrate

from malliavin_inspector.constants import QUADRATURE_HORIZON, TOL_OPERATOR, TOL_PIPELINE
from malliavin_inspector.exceptions import MalliavinError, MismatchedModel
from malliavin_inspector.models import Functional
from malliavin_inspector.models.functional import (
    center_given_latent,
    conditional_covariance,
    conditional_expectation_given_Z,
    conditional_variance,
)
from malliavin_inspector.operators import (
    carre_du_champ,
    chaos_decompose,
    chaos_order,
    gradient,
    inverse_L,
)

logger = logging.getLogger(__name__)


@dataclass
class ConcentrationRecord:
    latent: int
    lhs: float
    rhs: float
    threshold: Optional[float] = None

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> Dict[str, Any]:
        record = {"latent": self.latent, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack}
        if self.threshold is not None:
            record["threshold"] = self.threshold
        return record


@dataclass
class ConcentrationReport:
    """Per-latent-state comparison of the two sides of an inequality.

    passed is true when every record has slack >= -1e-10.
    """

    inequality: str
    records: List[ConcentrationRecord] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(record.slack >= -TOL_PIPELINE for record in self.records)

    @property
    def min_slack(self) -> float:
        return min((record.slack for record in self.records), default=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "inequality": self.inequality,
            "passed": self.passed,
            "min_slack": self.min_slack,
            "records": [record.to_dict() for record in self.records],
            "metadata": self.metadata,
        }

    def to_table(self) -> str:
        """Plain-text table, one line per record."""
        lines = [f"{'latent':>6} {'threshold':>10} {'lhs':>14} {'rhs':>14} {'slack':>14}"]
        for record in self.records:
            threshold = "" if record.threshold is None else f"{record.threshold:g}"
            lines.append(
                f"{record.latent:>6} {threshold:>10} {record.lhs:>14.6e} {record.rhs:>14.6e} {record.slack:>14.6e}"
            )
        return "\n".join(lines)


def covariance_malliavin(F: Functional, G: Functional) -> np.ndarray:
    """sum_a E[D_a F D_a(-L^{-1} G) | Z = z]; G is centered given Z first.

    Equals Cov(F, G | Z = z).
    """
    if F.model is not G.model:
        raise MismatchedModel("Functionals belong to different models")
    potential = -inverse_L(center_given_latent(G))
    total = np.zeros(F.model.n_latent)
    for a in F.model.indices:
        total = total + conditional_expectation_given_Z(gradient(F, a) * gradient(potential, a))
    return total


def covariance_quadrature(F: Functional, G: Functional, horizon: float = QUADRATURE_HORIZON) -> np.ndarray:
    """int_0^inf sum_a E[D_a F D_a P_t G | Z] dt with P_t from Mehler's formula."""
    if F.model is not G.model:
        raise MismatchedModel("Functionals belong to different models")
    model = F.model
    centered = center_given_latent(G)
    decomposition = chaos_decompose(centered)
    # sum_a E[D_a F D_a pi_n G | Z] for each chaos n; D_a P_t G = sum_n e^{-nt} D_a pi_n G
    weights = []
    for component in decomposition.components[1:]:
        inner = np.zeros(model.n_latent)
        for a in model.indices:
            inner = inner + conditional_expectation_given_Z(gradient(F, a) * gradient(component, a))
        weights.append(inner)
    weights_matrix = np.stack(weights)
    orders = np.arange(1, weights_matrix.shape[0] + 1, dtype=float)

    def integrand(t: float) -> np.ndarray:
        return np.exp(-orders * t) @ weights_matrix

    values, _ = integrate.quad_vec(integrand, 0.0, horizon, epsabs=1e-13, epsrel=1e-12)
    return values


def efron_stein_check(F: Functional) -> ConcentrationReport:
    """Var[F | Z = z] <= E[Gamma(F, F) | Z = z] for every latent state.

    When F lies in a single chaos p the report metadata also carries the equality
    residual of Var[F] = E[Gamma(F, F)] / p.
    """
    centered = center_given_latent(F)
    lhs = conditional_variance(F)
    rhs = conditional_expectation_given_Z(carre_du_champ(centered, centered))
    report = ConcentrationReport(
        inequality="efron-stein",
        records=[ConcentrationRecord(z, float(lhs[z]), float(rhs[z])) for z in range(F.model.n_latent)],
    )
    order = chaos_order(centered)
    if order:
        probs = F.model.latent.probs
        residual = abs(float(probs @ lhs) - float(probs @ rhs) / order)
        report.metadata.update({"chaos_order": order, "equality_residual": residual})
    logger.debug("Efron-Stein min slack %.3e", report.min_slack)
    return report


def spectral_efron_stein(F: Functional) -> np.ndarray:
    """sum_{p >= 1} (1/p) E[Gamma(pi_p F, pi_p F) | Z]; equals Var[F | Z]."""
    decomposition = chaos_decompose(F)
    total = np.zeros(F.model.n_latent)
    for p, component in enumerate(decomposition.components[1:], start=1):
        total = total + conditional_expectation_given_Z(carre_du_champ(component, component)) / p
    return total


def bounded_differences(F: Functional) -> np.ndarray:
    """d_a = max over (z, x, x'_a) of |F(z, x) - F(z, x with x_a replaced by x'_a)|.

    The maximum runs over every listed value, including zero-probability ones.
    """
    table = F.table
    spans = []
    for position in range(F.model.n_components):
        axis = position + 1
        spans.append(float(np.max(np.max(table, axis=axis) - np.min(table, axis=axis))))
    return np.asarray(spans)


def mcdiarmid_check(F: Functional, thresholds: Sequence[float]) -> ConcentrationReport:
    """Exact conditional tails against exp(-x^2 / (2 sum_a d_a^2)).

    For every latent state z and threshold x, lhs is P(F - E[F|Z] >= x | Z = z) by
    enumeration and rhs is the McDiarmid bound.
    """
    thresholds = [float(x) for x in thresholds]
    if not thresholds or any(x <= 0 for x in thresholds):
        raise MalliavinError("McDiarmid thresholds must be positive")
    model = F.model
    spans = bounded_differences(F)
    k2 = float(np.sum(spans**2))
    means = conditional_expectation_given_Z(F)
    deviations = F.table - means.reshape((-1,) + (1,) * model.n_components)
    report = ConcentrationReport(
        inequality="mcdiarmid",
        metadata={"bounded_differences": spans.tolist(), "sum_squared": k2},
    )
    for z in range(model.n_latent):
        weights = model.conditional_joint[z]
        for x in thresholds:
            tail = float(np.sum(weights[deviations[z] >= x - TOL_OPERATOR]))
            bound = math.exp(-(x**2) / (2.0 * k2)) if k2 > 0 else 0.0
            report.records.append(ConcentrationRecord(z, tail, bound, threshold=x))
    return report


def covariance_residual(F: Functional, G: Functional) -> float:
    """max_z |covariance_malliavin - Cov(F, G | Z = z)|."""
    return float(np.max(np.abs(covariance_malliavin(F, G) - conditional_covariance(F, G))))
