import logging
from functools import partial
from typing import List

from malliavin_inspector.config import ExperimentConfig
from malliavin_inspector.constants import TOL_W1
from malliavin_inspector.models import conditional_bernoulli, random_functional, random_model
from malliavin_inspector.normal_approx import (
    bernoulli_experiment,
    exact_w1,
    general_w1_bound,
    lyapunov_bound,
    multi_chaos_bound,
    normalized_sum,
    standardize,
)
from malliavin_inspector.operators import chaos_decompose
from malliavin_inspector.utils import make_rng

from .base import BaseSuite

logger = logging.getLogger(__name__)

BERNOULLI_NS = [64, 256, 1024]
BERNOULLI_SAMPLES = 200_000
BERNOULLI_LATENT = (0.3, 0.5, 0.7)
SLOPE_RANGE = (-0.70, -0.30)
SLOPE_MIN_ROWS = 3
WASSERSTEIN_MODELS = 50
LYAPUNOV_NS = list(range(1, 9))


class BernoulliSuite(BaseSuite):
    """Conditional Bernoulli CLT against the Lyapunov bound."""

    command = "clt-bernoulli"

    @classmethod
    def run(cls, config: ExperimentConfig) -> dict:
        ns = config.ns or BERNOULLI_NS
        samples = config.samples or BERNOULLI_SAMPLES
        experiment = bernoulli_experiment(
            ns,
            samples,
            latent_values=BERNOULLI_LATENT,
            seed=config.seed,
            workers=config.workers,
        )
        checks = {"dominated": experiment.dominated}
        if experiment.slope is not None and len(experiment.rows) >= SLOPE_MIN_ROWS:
            low, high = SLOPE_RANGE
            checks["slope"] = low <= experiment.slope <= high
        value = ", ".join(f"n={row.n}: {row.empirical_dw:.4f} <= {row.bound:.4f}" for row in experiment.rows)
        if experiment.slope is not None:
            value += f", slope={experiment.slope:.3f}"
        details = {"latent_values": list(BERNOULLI_LATENT), "samples": samples, "slope": experiment.slope}
        return cls.result(checks, value, details=details, rows=[row.to_dict() for row in experiment.rows])


class WassersteinSuite(BaseSuite):
    """Carre-du-champ, multi-chaos and Lyapunov bounds against exact distances."""

    command = "wass-bounds"

    @classmethod
    def run(cls, config: ExperimentConfig) -> dict:
        rng = make_rng(config.seed)
        rows = []
        margins: List[float] = []
        variance_gaps: List[float] = []
        multi_margins: List[float] = []
        for i in range(min(config.models, WASSERSTEIN_MODELS)):
            model = cls.load_model_or(config, partial(random_model, rng, max_components=8, max_values=2))
            F = standardize(random_functional(model, rng))
            breakdown = general_w1_bound(F)
            multi = multi_chaos_bound(chaos_decompose(F))
            margins.append(breakdown.margin)
            variance_gaps.append(breakdown.variance_total - breakdown.total)
            multi_margins.append(multi - breakdown.exact_dw)
            rows.append({"model": i, "components": model.n_components, "multi_chaos": multi, **breakdown.to_dict()})

        lyapunov_margins = []
        for n in LYAPUNOV_NS:
            model = conditional_bernoulli(n, (0.3, 0.7))
            bound = lyapunov_bound(model)
            exact = exact_w1(normalized_sum(model))
            lyapunov_margins.append(bound - exact)
            rows.append({"model": f"bernoulli-{n}", "components": n, "total": bound, "exact_dw": exact})

        checks = {
            "general_bound": min(margins, default=0.0) >= -TOL_W1,
            "variance_variant": min(variance_gaps, default=0.0) >= -TOL_W1,
            "multi_chaos": min(multi_margins, default=0.0) >= -TOL_W1,
            "lyapunov": min(lyapunov_margins) >= -TOL_W1,
        }
        details = {
            "min_margin": min(margins, default=None),
            "min_multi_chaos_margin": min(multi_margins, default=None),
            "min_lyapunov_margin": min(lyapunov_margins),
        }
        value = (
            f"min margin={details['min_margin']:.3e}, multi-chaos={details['min_multi_chaos_margin']:.3e}, "
            f"Lyapunov={details['min_lyapunov_margin']:.3e}"
            if margins
            else f"Lyapunov={details['min_lyapunov_margin']:.3e}"
        )
        return cls.result(checks, value, details=details, rows=rows)
