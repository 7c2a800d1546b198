import logging
from dataclasses import dataclass, field
from math import comb
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from malliavin_inspector.constants import (
    MAX_EXACT_VARIANCE_PAIRS,
    MAX_EXPERIMENT_DRAWS,
    STATISTIC_TILDE,
    STATISTICS,
)
from malliavin_inspector.exceptions import BudgetExceeded, EmptyFamily, MalliavinError, MotifTooLarge, ZeroVarianceError
from malliavin_inspector.normal_approx import EmpiricalDistribution, w1_to_std_normal
from malliavin_inspector.utils import parallel_map, spawn_streams, split_counts

from .decomposition import conditional_mean_count, count_motif, exact_variance, expected_count
from .generators import gen_g3, gen_t3
from .motifs import Motif, motif_placements

logger = logging.getLogger(__name__)

FAMILY_STRICT = "e_H > 1"
FAMILY_RELAXED = "H = G (single hyperedge)"
MIN_VARIANCE_SAMPLES = 10**4
EXACT_VARIANCE_MAX_N = 8

EXPERIMENT_COLUMNS = ["motif_id", "n", "p", "q", "samples", "seed", "mean", "var", "dw_empirical", "rate", "ratio"]


@dataclass
class RateDetails:
    value: float
    minimizer: Motif
    family: str
    family_size: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rate": self.value,
            "minimizer": [list(edge) for edge in self.minimizer.hyperedges],
            "family": self.family,
            "family_size": self.family_size,
        }


def rate_details(motif: Motif, n: int, p: float, q: float = 1.0, strict: bool = False) -> RateDetails:
    """(min_H n^{v_H} p^{e_H} q^{e2_H})^{-1/2} over sub-hypergraphs H with at least two hyperedges.

    For a single-hyperedge motif that family is empty; unless strict, it is replaced by {G}.

    Raises:
        EmptyFamily: When strict and the motif has a single hyperedge
        MotifTooLarge: When n < v_G
    """
    if n < motif.v:
        raise MotifTooLarge(f"Motif has {motif.v} vertices, n = {n}")
    if not (0 < p <= 1 and 0 < q <= 1):
        raise MalliavinError(f"Rate needs p, q in (0, 1], got p={p}, q={q}")
    family = motif.sub_motifs(min_edges=2)
    rule = FAMILY_STRICT
    if not family:
        if strict:
            raise EmptyFamily(f"Motif {motif.name} has no sub-hypergraph with more than one hyperedge")
        family = [motif]
        rule = FAMILY_RELAXED
        logger.info("Rate family for %s relaxed to the motif itself", motif.name)
    values = [float(n) ** sub.v * p**sub.e * q**sub.e2 for sub in family]
    best = int(np.argmin(values))
    return RateDetails(value=values[best] ** -0.5, minimizer=family[best], family=rule, family_size=len(family))


def rate(motif: Motif, n: int, p: float, q: float = 1.0) -> float:
    return rate_details(motif, n, p, q).value


@dataclass
class ExperimentRow:
    motif_id: str
    n: int
    p: float
    q: float
    samples: int
    seed: Optional[int]
    mean: float
    var: float
    dw_empirical: float
    rate: float
    ratio: float

    def to_dict(self) -> Dict[str, Any]:
        return {column: getattr(self, column) for column in EXPERIMENT_COLUMNS}


@dataclass
class CltExperiment:
    motif: Motif
    statistic: str
    rows: List[ExperimentRow] = field(default_factory=list)
    family: str = FAMILY_STRICT
    normalizers: List[str] = field(default_factory=list)

    @property
    def monotone_decreasing(self) -> bool:
        dws = [row.dw_empirical for row in self.rows]
        return all(later < earlier for earlier, later in zip(dws, dws[1:]))

    @property
    def max_ratio(self) -> float:
        return max((row.ratio for row in self.rows), default=0.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "motif": self.motif.to_dict(),
            "statistic": self.statistic,
            "family": self.family,
            "normalizers": self.normalizers,
            "monotone_decreasing": self.monotone_decreasing,
            "max_ratio": self.max_ratio,
            "rows": [row.to_dict() for row in self.rows],
        }


def _check_budget(schedule: Sequence[Tuple[int, float, float]], samples: int) -> None:
    draws = sum(samples * (comb(n, 3) + comb(n, 2)) for n, _, _ in schedule)
    if draws > MAX_EXPERIMENT_DRAWS:
        raise BudgetExceeded(f"Schedule needs {draws} random draws, budget is {MAX_EXPERIMENT_DRAWS}")


def sample_statistics(
    motif: Motif,
    n: int,
    p: float,
    q: float,
    samples: int,
    statistic: str,
    seed: Optional[int] = None,
    workers: int = 1,
) -> np.ndarray:
    """Centered motif statistics for `samples` independent hypergraphs.

    Workers draw contiguous blocks from streams derived from (seed, worker) and the blocks
    are concatenated in worker order. q = 1 uses G^(3)(n, p).
    """
    if statistic not in STATISTICS:
        raise MalliavinError(f"Unknown statistic '{statistic}'")
    motif_placements(motif, n)
    mean = expected_count(motif, n, p, q)
    streams = spawn_streams(seed, workers)
    shares = split_counts(samples, workers)

    def run(worker: int) -> np.ndarray:
        rng = streams[worker]
        values = np.empty(shares[worker])
        for i in range(shares[worker]):
            sample = gen_g3(n, p, rng) if q == 1.0 else gen_t3(n, q, p, rng)
            count = count_motif(sample, motif)
            if statistic == STATISTIC_TILDE:
                values[i] = count - conditional_mean_count(sample, motif)
            else:
                values[i] = count - mean
        return values

    return np.concatenate(parallel_map(run, list(range(workers)), workers))


def clt_experiment(
    motif: Motif,
    schedule: Sequence[Tuple[int, float, float]],
    samples: int,
    seed: Optional[int] = None,
    workers: int = 1,
    statistic: str = STATISTIC_TILDE,
) -> CltExperiment:
    """Empirical d_W of the standardized motif statistic along a schedule of (n, p, q).

    The normalizer is the variance of the centered statistic: exact for n <= 8, otherwise
    the Monte Carlo variance of the draws. Row i uses seed + i.

    Raises:
        BudgetExceeded: When the schedule needs more draws than the budget
        ZeroVarianceError: When the statistic has zero variance at some n
    """
    _check_budget(schedule, samples)
    if samples < MIN_VARIANCE_SAMPLES:
        logger.warning("Only %d samples per n; the variance estimate is coarse", samples)
    experiment = CltExperiment(motif=motif, statistic=statistic)
    for i, (n, p, q) in enumerate(schedule):
        row_seed = None if seed is None else seed + i
        details = rate_details(motif, n, p, q)
        experiment.family = details.family
        values = sample_statistics(motif, n, p, q, samples, statistic, seed=row_seed, workers=workers)
        variance, normalizer = _normalizer(motif, n, p, q, statistic, values)
        if variance <= 0:
            raise ZeroVarianceError(f"Statistic of {motif.name} has zero variance at n={n}, p={p}, q={q}")
        standardized = values / np.sqrt(variance)
        dw = w1_to_std_normal(EmpiricalDistribution(standardized))
        row = ExperimentRow(
            motif_id=motif.name,
            n=int(n),
            p=float(p),
            q=float(q),
            samples=samples,
            seed=row_seed,
            mean=float(np.mean(values)),
            var=float(variance),
            dw_empirical=dw,
            rate=details.value,
            ratio=dw / details.value,
        )
        logger.info("Motif %s n=%d: d_W=%.4f rate=%.4e ratio=%.3f", motif.name, n, dw, details.value, row.ratio)
        experiment.rows.append(row)
        experiment.normalizers.append(normalizer)
    return experiment


def _normalizer(
    motif: Motif,
    n: int,
    p: float,
    q: float,
    statistic: str,
    values: np.ndarray,
) -> Tuple[float, str]:
    if n <= EXACT_VARIANCE_MAX_N and motif_placements(motif, n).copies ** 2 <= MAX_EXACT_VARIANCE_PAIRS:
        exact = exact_variance(motif, n, p, q)
        return (exact.conditional if statistic == STATISTIC_TILDE else exact.total), "exact"
    return float(np.var(values, ddof=1)) if values.size > 1 else 0.0, "monte-carlo"
