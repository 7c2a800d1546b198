"""Exchangeable 3-uniform random hypergraphs.

Z is a latent graph on [n] (stored as one boolean per pair) and X one boolean per triple.
Given Z the triples are independent; a triple can only be present when its three pairs
are edges of Z.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import networkx as nx
import numpy as np

from malliavin_inspector.exceptions import MalliavinError

from .motifs import pairs, triple_pairs, triples

logger = logging.getLogger(__name__)

MODEL_G3 = "G3"
MODEL_T3 = "T3"
MODEL_SBM = "SBM"


@dataclass
class HypergraphSample:
    """A sampled hypergraph with its latent graph.

    Attributes:
        n: Number of vertices
        model: G3, T3 or SBM
        latent: Boolean per pair of [n] (lexicographic order), the edge set Z
        hyperedges: Boolean per triple of [n] (lexicographic order), the indicators X_alpha
        p: Hyperedge probability given the supporting pairs
        q: Edge probability of the latent graph (None for block models)
    """

    n: int
    model: str
    latent: np.ndarray
    hyperedges: np.ndarray
    p: float
    q: Optional[float] = None

    @property
    def hyperedge_count(self) -> int:
        return int(np.count_nonzero(self.hyperedges))

    def hyperedge_list(self) -> List[tuple]:
        return [tuple(int(v) for v in t) for t in triples(self.n)[self.hyperedges]]

    def supported(self) -> np.ndarray:
        """Boolean per triple: all three pairs are edges of Z."""
        return self.latent[triple_pairs(self.n)].all(axis=1)

    def latent_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(tuple(int(v) for v in edge) for edge in pairs(self.n)[self.latent])
        return graph

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "model": self.model,
            "p": self.p,
            "q": self.q,
            "latent_edges": [list(map(int, e)) for e in pairs(self.n)[self.latent]],
            "hyperedges": [list(t) for t in self.hyperedge_list()],
        }


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise MalliavinError(f"{name} must lie in [0, 1], got {value}")


def _check_n(n: int) -> None:
    if n < 3:
        raise MalliavinError(f"A 3-uniform hypergraph needs n >= 3, got {n}")


def hyperedges_given_latent(latent: np.ndarray, n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(p) coins, kept only on triples whose pairs all lie in Z."""
    coins = rng.random(triples(n).shape[0]) < p
    return coins & latent[triple_pairs(n)].all(axis=1)


def gen_g3(n: int, p: float, rng: np.random.Generator) -> HypergraphSample:
    """G^(3)(n, p): every triple present independently with probability p; Z complete."""
    _check_n(n)
    _check_probability("p", p)
    latent = np.ones(pairs(n).shape[0], dtype=bool)
    hyperedges = rng.random(triples(n).shape[0]) < p
    return HypergraphSample(n=n, model=MODEL_G3, latent=latent, hyperedges=hyperedges, p=p, q=1.0)


def gen_t3(n: int, q: float, p: float, rng: np.random.Generator) -> HypergraphSample:
    """T^(3)(n, q, p): Z ~ G(n, q), then each Z-supported triple present with probability p."""
    _check_n(n)
    _check_probability("p", p)
    _check_probability("q", q)
    latent = rng.random(pairs(n).shape[0]) < q
    hyperedges = hyperedges_given_latent(latent, n, p, rng)
    return HypergraphSample(n=n, model=MODEL_T3, latent=latent, hyperedges=hyperedges, p=p, q=q)


def gen_sbm_latent(
    n: int,
    block_sizes: Sequence[int],
    q_matrix: Sequence[Sequence[float]],
    p: float,
    rng: np.random.Generator,
) -> HypergraphSample:
    """Latent stochastic block model graph, hyperedges drawn as in T^(3).

    Vertices are assigned to blocks in order; the pair {i, j} is an edge of Z with
    probability q_matrix[block(i)][block(j)].
    """
    _check_n(n)
    _check_probability("p", p)
    sizes = np.asarray(block_sizes, dtype=int)
    if sizes.sum() != n or np.any(sizes < 1):
        raise MalliavinError(f"Block sizes {list(sizes)} must be positive and sum to n={n}")
    probs = np.asarray(q_matrix, dtype=float)
    if probs.shape != (sizes.size, sizes.size) or not np.allclose(probs, probs.T):
        raise MalliavinError("Block probability matrix must be symmetric with one row per block")
    if np.any(probs < 0) or np.any(probs > 1):
        raise MalliavinError("Block probabilities must lie in [0, 1]")
    block = np.repeat(np.arange(sizes.size), sizes)
    pair_array = pairs(n)
    edge_probs = probs[block[pair_array[:, 0]], block[pair_array[:, 1]]]
    latent = rng.random(pair_array.shape[0]) < edge_probs
    hyperedges = hyperedges_given_latent(latent, n, p, rng)
    logger.debug("SBM latent graph: %d blocks, %d edges", sizes.size, int(latent.sum()))
    return HypergraphSample(n=n, model=MODEL_SBM, latent=latent, hyperedges=hyperedges, p=p, q=None)
