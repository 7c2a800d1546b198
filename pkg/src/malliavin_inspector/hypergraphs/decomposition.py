"""Motif counts N_G and their Hoeffding decompositions.

With z_alpha = 1{alpha^(2) in Z} and Y_alpha = X_alpha - p z_alpha, each copy H contributes
prod_{alpha in H} (Y_alpha + p z_alpha), which expands over the subsets J of H.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Dict, Optional, Tuple

import numpy as np

from malliavin_inspector.constants import MAX_DECOMPOSITION_SUBSETS, MAX_EXACT_VARIANCE_PAIRS
from malliavin_inspector.exceptions import DecompositionTooLarge, MalliavinError, MotifTooLarge

from .generators import HypergraphSample
from .motifs import Motif, local_pair_count, motif_placements, triple_lookup, triples

logger = logging.getLogger(__name__)

Key = Tuple[int, ...]


def count_motif(sample: HypergraphSample, motif: Motif) -> int:
    """N_G: number of copies of the motif whose hyperedges are all present.

    Raises:
        MotifTooLarge: When the motif has more vertices than the sample
    """
    placements = motif_placements(motif, sample.n)
    return int(np.count_nonzero(sample.hyperedges[placements.triples].all(axis=1)))


def count_motif_injections(sample: HypergraphSample, motif: Motif) -> int:
    """Labeled injections of the motif vertices into [n] with all hyperedges present, over |Aut|."""
    if motif.v > sample.n:
        raise MotifTooLarge(f"Motif has {motif.v} vertices, hypergraph has {sample.n}")
    lookup = triple_lookup(sample.n)
    hits = 0
    for image in permutations(range(sample.n), motif.v):
        mapping = dict(zip(motif.vertices, image))
        if all(sample.hyperedges[lookup[tuple(mapping[v] for v in edge)]] for edge in motif.hyperedges):
            hits += 1
    return hits // motif.automorphisms


def count_motif_by_subsets(sample: HypergraphSample, motif: Motif) -> int:
    """Subsets of e_G present hyperedges that form a copy of the motif."""
    present = [tuple(int(v) for v in t) for t in triples(sample.n)[sample.hyperedges]]
    count = 0
    for edges in combinations(present, motif.e):
        candidate = Motif(name="candidate", hyperedges=edges)
        if candidate.is_isomorphic(motif):
            count += 1
    return count


def _supported(sample: HypergraphSample, motif: Motif) -> np.ndarray:
    """z per copy and hyperedge column, shape (copies, e)."""
    placements = motif_placements(motif, sample.n)
    return sample.latent[placements.hyperedge_pairs].all(axis=-1)


def conditional_mean_count(sample: HypergraphSample, motif: Motif, p: Optional[float] = None) -> float:
    """E[N_G | Z] = p^{e_G} #{copies H with H^(2) in Z}."""
    p = sample.p if p is None else p
    covered = _supported(sample, motif).all(axis=1)
    return float(p**motif.e * np.count_nonzero(covered))


def expected_count(motif: Motif, n: int, p: float, q: float) -> float:
    """E[N_G] = #copies p^{e_G} q^{e2_G}."""
    return motif_placements(motif, n).copies * p**motif.e * q**motif.e2


@dataclass
class MotifCountStat:
    """Raw count with both centerings.

    bar is centered at E[N_G], tilde at E[N_G | Z] for the sample's own Z.
    """

    raw: int
    mean: Optional[float]
    conditional_mean: float

    @property
    def tilde(self) -> float:
        return self.raw - self.conditional_mean

    @property
    def bar(self) -> Optional[float]:
        return None if self.mean is None else self.raw - self.mean


def motif_statistic(sample: HypergraphSample, motif: Motif) -> MotifCountStat:
    mean = None if sample.q is None else expected_count(motif, sample.n, sample.p, sample.q)
    return MotifCountStat(
        raw=count_motif(sample, motif),
        mean=mean,
        conditional_mean=conditional_mean_count(sample, motif),
    )


def _accumulate(target: Dict[Key, float], keys: np.ndarray, values: np.ndarray) -> None:
    """Add values into target under the sorted rows of keys."""
    keep = values != 0
    if not np.any(keep):
        return
    rows = np.sort(keys[keep], axis=1)
    unique, inverse = np.unique(rows, axis=0, return_inverse=True)
    sums = np.bincount(inverse.reshape(-1), weights=values[keep], minlength=unique.shape[0])
    for row, value in zip(unique, sums):
        key = tuple(int(v) for v in row)
        target[key] = target.get(key, 0.0) + float(value)


def _column_subsets(size: int):
    for k in range(1, size + 1):
        for cols in combinations(range(size), k):
            yield cols, tuple(c for c in range(size) if c not in cols)


@dataclass
class MotifHoeffding:
    """Hoeffding terms W_J keyed by sorted triple indices; zero terms are omitted."""

    terms: Dict[Key, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(self.terms.values()))


def _check_budget(copies: int, subsets: int) -> None:
    if copies * subsets > MAX_DECOMPOSITION_SUBSETS:
        raise DecompositionTooLarge(
            f"{copies} copies times {subsets} subsets exceeds the limit of {MAX_DECOMPOSITION_SUBSETS}"
        )


def hoeffding_terms(sample: HypergraphSample, motif: Motif, p: Optional[float] = None) -> MotifHoeffding:
    """W_J = sum_{H contains J} p^{|H|-|J|} 1{(H minus J)^(2) in Z} prod_{alpha in J} Y_alpha.

    sum_J W_J = N_G - E[N_G | Z] exactly.

    Raises:
        DecompositionTooLarge: When copies times 2^{e_G} exceeds 10^6
    """
    p = sample.p if p is None else p
    placements = motif_placements(motif, sample.n)
    _check_budget(placements.copies, 2**motif.e)
    x = sample.hyperedges[placements.triples].astype(float)
    z = _supported(sample, motif).astype(float)
    y = x - p * z
    result = MotifHoeffding()
    for cols, rest in _column_subsets(motif.e):
        values = p ** len(rest) * np.prod(z[:, list(rest)], axis=1) * np.prod(y[:, list(cols)], axis=1)
        _accumulate(result.terms, placements.triples[:, list(cols)], values)
    return result


@dataclass
class ModifiedHoeffding:
    """The three families W^[1]_J, W^[2]_K, W^[3]_J.

    J runs over hyperedge subsets (triple indices), K over non-empty subsets of H^(2)
    (pair indices). Their grand total is N_G - E[N_G].
    """

    first: Dict[Key, float] = field(default_factory=dict)
    second: Dict[Key, float] = field(default_factory=dict)
    third: Dict[Key, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(sum(self.first.values()) + sum(self.second.values()) + sum(self.third.values()))


def modified_hoeffding_terms(
    sample: HypergraphSample,
    motif: Motif,
    p: Optional[float] = None,
    q: Optional[float] = None,
) -> ModifiedHoeffding:
    """Modified decomposition splitting the latent fluctuation out of every term.

    W^[1]_J = sum_H p^{|H|-|J|} q^{|(H minus J)^(2)|} prod_J Y
    W^[3]_J = sum_H p^{|H|-|J|} (prod_{(H minus J)^(2)} Xhat - q^{|(H minus J)^(2)|}) prod_J Y
    W^[2]_K = sum_{H: K in H^(2)} p^{|H|} q^{|H^(2)|-|K|} prod_{beta in K} (Xhat_beta - q)
    with Xhat_beta = 1{beta in Z}.
    """
    p = sample.p if p is None else p
    q = sample.q if q is None else q
    if q is None:
        raise MalliavinError("Modified decomposition needs an edge probability q")
    placements = motif_placements(motif, sample.n)
    _check_budget(placements.copies, 2**motif.e + 2**motif.e2)
    x = sample.hyperedges[placements.triples].astype(float)
    z = _supported(sample, motif).astype(float)
    y = x - p * z
    result = ModifiedHoeffding()
    for cols, rest in _column_subsets(motif.e):
        weight = p ** len(rest)
        product_y = np.prod(y[:, list(cols)], axis=1)
        q_power = q ** local_pair_count(motif, rest)
        keys = placements.triples[:, list(cols)]
        _accumulate(result.first, keys, weight * q_power * product_y)
        _accumulate(result.third, keys, weight * (np.prod(z[:, list(rest)], axis=1) - q_power) * product_y)
    xhat = sample.latent[placements.pairs].astype(float)
    for cols, _ in _column_subsets(motif.e2):
        values = p**motif.e * q ** (motif.e2 - len(cols)) * np.prod(xhat[:, list(cols)] - q, axis=1)
        _accumulate(result.second, placements.pairs[:, list(cols)], values)
    return result


@dataclass
class ExactMotifVariance:
    """Var N_G and E[Var(N_G | Z)] from pair sums over copies."""

    total: float
    conditional: float
    mean: float


def exact_variance(motif: Motif, n: int, p: float, q: float = 1.0) -> ExactMotifVariance:
    """Exact variances through E[N_H N_H'] = p^{|H u H'|} q^{|(H u H')^(2)|}.

    Raises:
        DecompositionTooLarge: When the number of copy pairs exceeds 10^7
    """
    placements = motif_placements(motif, n)
    copies = placements.copies
    if copies**2 > MAX_EXACT_VARIANCE_PAIRS:
        raise DecompositionTooLarge(f"{copies}^2 copy pairs exceed the limit of {MAX_EXACT_VARIANCE_PAIRS}")
    t = placements.triples
    pp = placements.pairs
    second_moment = 0.0
    conditional = 0.0
    for i in range(copies):
        union_edges = 2 * motif.e - np.isin(t, t[i]).sum(axis=1)
        union_pairs = 2 * motif.e2 - np.isin(pp, pp[i]).sum(axis=1)
        q_part = q**union_pairs
        second_moment += float(np.sum(p**union_edges * q_part))
        conditional += float(np.sum((p**union_edges - p ** (2 * motif.e)) * q_part))
    mean = expected_count(motif, n, p, q)
    logger.debug("Exact motif variance over %d copy pairs", copies**2)
    return ExactMotifVariance(total=second_moment - mean**2, conditional=conditional, mean=mean)
