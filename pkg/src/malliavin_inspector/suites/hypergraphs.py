import logging
import math
from typing import Any, Dict

import numpy as np

from malliavin_inspector.config import ExperimentConfig
from malliavin_inspector.constants import SE_GATE
from malliavin_inspector.hypergraphs import (
    Motif,
    clt_experiment,
    conditional_mean_count,
    count_motif,
    count_motif_by_subsets,
    count_motif_injections,
    expected_count,
    gen_g3,
    gen_t3,
    get_motif,
    hoeffding_terms,
    load_motif,
    modified_hoeffding_terms,
)
from malliavin_inspector.utils import make_rng

from .base import BaseSuite

logger = logging.getLogger(__name__)

EXPERIMENT_NS = [10, 20, 40]
EXPERIMENT_SAMPLES = 20_000
IDENTITY_N = 8
IDENTITY_SAMPLES = 1000
IDENTITY_LATENT_Q = 0.8
BRUTE_FORCE_N = 6
BRUTE_FORCE_SAMPLES = 20
TOL_IDENTITY = 1e-8
MAX_RATIO_SPREAD = 3.0


def identity_residuals(motif: Motif, p: float, samples: int, rng: np.random.Generator) -> Dict[str, float]:
    """Per-sample residuals of both decompositions on T3 hypergraphs, plus the q = 1 reductions."""
    plain = 0.0
    modified = 0.0
    vanishing = 0.0
    n = max(IDENTITY_N, motif.v)
    for i in range(samples):
        q = 1.0 if i % 2 else IDENTITY_LATENT_Q
        sample = gen_t3(n, q, p, rng)
        count = count_motif(sample, motif)
        plain = max(plain, abs(hoeffding_terms(sample, motif).total - (count - conditional_mean_count(sample, motif))))
        terms = modified_hoeffding_terms(sample, motif)
        modified = max(modified, abs(terms.total - (count - expected_count(motif, n, p, q))))
        if q == 1.0:
            leftover = sum(abs(v) for v in terms.second.values()) + sum(abs(v) for v in terms.third.values())
            vanishing = max(vanishing, leftover)
    return {"plain_identity": plain, "modified_identity": modified, "latent_terms_at_q1": vanishing}


def brute_force_mismatches(motif: Motif, p: float, rng: np.random.Generator) -> int:
    mismatches = 0
    for _ in range(BRUTE_FORCE_SAMPLES):
        sample = gen_g3(max(BRUTE_FORCE_N, motif.v), p, rng)
        counts = {
            count_motif(sample, motif),
            count_motif_injections(sample, motif),
            count_motif_by_subsets(sample, motif),
        }
        mismatches += len(counts) > 1
    return mismatches


def generator_agreement(motif: Motif, p: float, samples: int, rng: np.random.Generator) -> Dict[str, float]:
    """Mean motif counts under T3 with q = 1 and under G3, with the gap in standard errors."""
    n = max(IDENTITY_N, motif.v)
    t3 = np.array([count_motif(gen_t3(n, 1.0, p, rng), motif) for _ in range(samples)], dtype=float)
    g3 = np.array([count_motif(gen_g3(n, p, rng), motif) for _ in range(samples)], dtype=float)
    stderr = math.sqrt((t3.var(ddof=1) + g3.var(ddof=1)) / samples) if samples > 1 else 0.0
    gap = abs(t3.mean() - g3.mean())
    return {
        "t3_mean": float(t3.mean()),
        "g3_mean": float(g3.mean()),
        "standard_errors": gap / stderr if stderr else 0.0,
    }


class HypergraphSuite(BaseSuite):
    """Motif decompositions and the motif-count CLT experiment."""

    command = "hypergraph-motif"

    @classmethod
    def run(cls, config: ExperimentConfig) -> dict:
        motif = load_motif(config.motif_path) if config.motif_path else get_motif(config.motif)
        rng = make_rng(config.seed)
        residuals = identity_residuals(motif, config.p, IDENTITY_SAMPLES, rng)
        mismatches = brute_force_mismatches(motif, config.p, rng)
        agreement = generator_agreement(motif, config.p, IDENTITY_SAMPLES, rng)

        schedule = [(n, config.p, config.q) for n in (config.ns or EXPERIMENT_NS)]
        experiment = clt_experiment(
            motif,
            schedule,
            config.samples or EXPERIMENT_SAMPLES,
            seed=config.seed + 1,
            workers=config.workers,
            statistic=config.statistic,
        )
        ratios = [row.ratio for row in experiment.rows]
        spread = max(ratios) / min(ratios) if ratios and min(ratios) > 0 else math.inf

        checks = {
            "plain_identity": residuals["plain_identity"] < TOL_IDENTITY,
            "modified_identity": residuals["modified_identity"] < TOL_IDENTITY,
            "latent_terms_at_q1": residuals["latent_terms_at_q1"] < TOL_IDENTITY,
            "brute_force_counts": mismatches == 0,
            "g3_t3_agreement": agreement["standard_errors"] <= SE_GATE,
            "dw_decreasing": experiment.monotone_decreasing,
            "ratio_spread": spread < MAX_RATIO_SPREAD,
        }
        details: Dict[str, Any] = {
            "motif": motif.to_dict(),
            "statistic": config.statistic,
            "family": experiment.family,
            "normalizers": experiment.normalizers,
            "ratio_spread": spread,
            "brute_force_mismatches": mismatches,
            **residuals,
            **agreement,
        }
        value = ", ".join(f"n={row.n}: d_W={row.dw_empirical:.4f} ratio={row.ratio:.2f}" for row in experiment.rows)
        return cls.result(checks, value, details=details, rows=[row.to_dict() for row in experiment.rows])
