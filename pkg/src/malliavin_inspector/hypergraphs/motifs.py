import json
import logging
import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations, permutations
from typing import Any, Dict, FrozenSet, List, Mapping, Tuple

import numpy as np

from malliavin_inspector.constants import MAX_AUTOMORPHISM_VERTICES, MIN_DESCRIPTOR_VERSION
from malliavin_inspector.exceptions import ConfigError, DescriptorError, MalliavinError, MotifTooLarge
from malliavin_inspector.utils import is_version_supported

logger = logging.getLogger(__name__)

Triple = Tuple[int, int, int]
Pair = Tuple[int, int]


def _normalize(hyperedges) -> Tuple[Triple, ...]:
    normalized = []
    for edge in hyperedges:
        triple = tuple(sorted(int(v) for v in edge))
        if len(triple) != 3 or len(set(triple)) != 3:
            raise MalliavinError(f"Hyperedge {edge!r} must have three distinct vertices")
        normalized.append(triple)
    if not normalized:
        raise MalliavinError("A motif needs at least one hyperedge")
    if len(set(normalized)) != len(normalized):
        raise MalliavinError("A motif cannot repeat a hyperedge")
    return tuple(sorted(normalized))


def edge_pairs(triple: Tuple[int, ...]) -> List[Pair]:
    """The three 2-subsets of a hyperedge."""
    return [tuple(pair) for pair in combinations(sorted(triple), 2)]


@dataclass(frozen=True)
class Motif:
    """A 3-uniform hypergraph without isolated vertices.

    Vertices are those covered by the hyperedges, so no vertex is isolated.
    """

    name: str
    hyperedges: Tuple[Triple, ...]

    def __post_init__(self):
        object.__setattr__(self, "hyperedges", _normalize(self.hyperedges))

    @property
    def vertices(self) -> Tuple[int, ...]:
        return tuple(sorted({v for edge in self.hyperedges for v in edge}))

    @property
    def v(self) -> int:
        return len(self.vertices)

    @property
    def e(self) -> int:
        return len(self.hyperedges)

    @property
    def pairs(self) -> Tuple[Pair, ...]:
        """Distinct 2-subsets contained in the hyperedges."""
        return tuple(sorted({pair for edge in self.hyperedges for pair in edge_pairs(edge)}))

    @property
    def e2(self) -> int:
        return len(self.pairs)

    @cached_property
    def labelings(self) -> Tuple[Tuple[Tuple[Triple, ...], Tuple[Pair, ...]], ...]:
        """Distinct placements of the motif on vertex positions 0..v-1.

        Each entry lists the placed hyperedges in the motif's hyperedge order and the placed
        pairs in the motif's pair order, so columns mean the same thing across placements.
        """
        if self.v > MAX_AUTOMORPHISM_VERTICES:
            raise MalliavinError(
                f"Motif has {self.v} vertices, brute-force relabeling is limited to {MAX_AUTOMORPHISM_VERTICES}"
            )
        seen: Dict[FrozenSet[Triple], Tuple[Tuple[Triple, ...], Tuple[Pair, ...]]] = {}
        for image in permutations(range(self.v)):
            mapping = dict(zip(self.vertices, image))
            placed = tuple(tuple(sorted(mapping[v] for v in edge)) for edge in self.hyperedges)
            key = frozenset(placed)
            if key not in seen:
                placed_pairs = tuple(tuple(sorted((mapping[i], mapping[j]))) for i, j in self.pairs)
                seen[key] = (placed, placed_pairs)
        return tuple(seen.values())

    @property
    def automorphisms(self) -> int:
        return math.factorial(self.v) // len(self.labelings)

    @cached_property
    def canonical(self) -> Tuple[Triple, ...]:
        """Smallest relabeled hyperedge list; equal for isomorphic motifs."""
        return min(tuple(sorted(placed)) for placed, _ in self.labelings)

    def is_isomorphic(self, other: "Motif") -> bool:
        return self.v == other.v and self.e == other.e and self.canonical == other.canonical

    def sub_motifs(self, min_edges: int = 1) -> List["Motif"]:
        """Sub-hypergraphs spanned by hyperedge subsets (with their covered vertices)."""
        subs = []
        for size in range(min_edges, self.e + 1):
            for edges in combinations(self.hyperedges, size):
                subs.append(Motif(name=f"{self.name}[{size}]", hyperedges=edges))
        return subs

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "vertices": self.v,
            "hyperedges": [list(edge) for edge in self.hyperedges],
            "e": self.e,
            "e2": self.e2,
            "automorphisms": self.automorphisms,
        }


MOTIFS = {
    "single-edge": Motif("single-edge", ((0, 1, 2),)),
    "two-edges-vertex": Motif("two-edges-vertex", ((0, 1, 2), (0, 3, 4))),
    "two-edges-pair": Motif("two-edges-pair", ((0, 1, 2), (0, 1, 3))),
    "three-edges-triangle": Motif("three-edges-triangle", ((0, 1, 2), (0, 1, 3), (0, 2, 3))),
}


def get_motif(name: str) -> Motif:
    if name not in MOTIFS:
        raise ConfigError(f"Unknown motif '{name}'. Available: {', '.join(MOTIFS)}")
    return MOTIFS[name]


def motif_from_dict(data: Mapping[str, Any]) -> Motif:
    """Motif from {"vertices": k, "hyperedges": [[a, b, c], ...]} with vertices 0..k-1.

    Raises:
        DescriptorError: With the path of the first violation
    """
    if not isinstance(data, Mapping):
        raise DescriptorError("", "motif descriptor must be a JSON object")
    format_version = data.get("format_version")
    if format_version is not None and not is_version_supported(str(format_version), MIN_DESCRIPTOR_VERSION):
        raise DescriptorError("format_version", f"{format_version!r} is older than {MIN_DESCRIPTOR_VERSION}")
    k = data.get("vertices")
    if isinstance(k, bool) or not isinstance(k, int) or k < 3:
        raise DescriptorError("vertices", "expected an integer of at least 3")
    edges = data.get("hyperedges")
    if not isinstance(edges, list) or not edges:
        raise DescriptorError("hyperedges", "expected a non-empty list of triples")
    for i, edge in enumerate(edges):
        if not isinstance(edge, list) or len(edge) != 3:
            raise DescriptorError(f"hyperedges[{i}]", "expected three vertices")
        for j, vertex in enumerate(edge):
            if isinstance(vertex, bool) or not isinstance(vertex, int) or not 0 <= vertex < k:
                raise DescriptorError(f"hyperedges[{i}][{j}]", f"vertex must be an integer in 0..{k - 1}")
    try:
        motif = Motif(name=str(data.get("name", "custom")), hyperedges=tuple(tuple(edge) for edge in edges))
    except MalliavinError as e:
        raise DescriptorError("hyperedges", str(e)) from e
    if motif.v != k:
        raise DescriptorError("vertices", f"{k - motif.v} vertices are isolated")
    return motif


def load_motif(path: str) -> Motif:
    if not os.path.isfile(path):
        raise ConfigError(f"Motif descriptor not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise DescriptorError("", f"{path} is not valid JSON: {e}") from e
    return motif_from_dict(data)


@lru_cache(maxsize=16)
def triples(n: int) -> np.ndarray:
    """All 3-subsets of range(n) in lexicographic order, shape (C(n, 3), 3)."""
    return np.array(list(combinations(range(n), 3)), dtype=np.int64).reshape(-1, 3)


@lru_cache(maxsize=16)
def pairs(n: int) -> np.ndarray:
    return np.array(list(combinations(range(n), 2)), dtype=np.int64).reshape(-1, 2)


@lru_cache(maxsize=16)
def pair_lookup(n: int) -> np.ndarray:
    """Symmetric (n, n) table of pair indices (-1 on the diagonal)."""
    lookup = np.full((n, n), -1, dtype=np.int64)
    for k, (i, j) in enumerate(pairs(n)):
        lookup[i, j] = lookup[j, i] = k
    return lookup


@lru_cache(maxsize=16)
def triple_lookup(n: int) -> np.ndarray:
    """(n, n, n) table of triple indices, symmetric in its three arguments."""
    lookup = np.full((n, n, n), -1, dtype=np.int64)
    for k, triple in enumerate(triples(n)):
        for i, j, l in permutations(triple):
            lookup[i, j, l] = k
    return lookup


@lru_cache(maxsize=16)
def triple_pairs(n: int) -> np.ndarray:
    """Pair indices of the three 2-subsets of every triple, shape (C(n, 3), 3)."""
    lookup = pair_lookup(n)
    t = triples(n)
    return np.stack([lookup[t[:, 0], t[:, 1]], lookup[t[:, 0], t[:, 2]], lookup[t[:, 1], t[:, 2]]], axis=1)


@dataclass(frozen=True, eq=False)
class MotifPlacements:
    """Every copy of a motif in the complete 3-uniform hypergraph on n vertices.

    Attributes:
        triples: (copies, e) triple indices, columns in the motif's hyperedge order
        hyperedge_pairs: (copies, e, 3) pair indices of each hyperedge
        pairs: (copies, e2) pair indices of H^(2), columns in the motif's pair order
    """

    motif: Motif
    n: int
    triples: np.ndarray
    hyperedge_pairs: np.ndarray
    pairs: np.ndarray

    @property
    def copies(self) -> int:
        return int(self.triples.shape[0])


@lru_cache(maxsize=16)
def motif_placements(motif: Motif, n: int) -> MotifPlacements:
    """Enumerate the copies H of the motif: each vertex set times each distinct labeling.

    Raises:
        MotifTooLarge: When v_G > n
    """
    if motif.v > n:
        raise MotifTooLarge(f"Motif has {motif.v} vertices, hypergraph has {n}")
    vertex_sets = np.array(list(combinations(range(n), motif.v)), dtype=np.int64).reshape(-1, motif.v)
    t_lookup = triple_lookup(n)
    p_lookup = pair_lookup(n)
    blocks_t, blocks_p = [], []
    for local_edges, local_pairs in motif.labelings:
        blocks_t.append(
            np.stack([t_lookup[vertex_sets[:, i], vertex_sets[:, j], vertex_sets[:, k]] for i, j, k in local_edges], 1)
        )
        blocks_p.append(np.stack([p_lookup[vertex_sets[:, i], vertex_sets[:, j]] for i, j in local_pairs], 1))
    placed = np.concatenate(blocks_t)
    placed_pairs = np.concatenate(blocks_p)
    logger.debug("Motif %s on n=%d: %d copies", motif.name, n, placed.shape[0])
    return MotifPlacements(
        motif=motif,
        n=n,
        triples=placed,
        hyperedge_pairs=triple_pairs(n)[placed],
        pairs=placed_pairs,
    )


def local_pair_count(motif: Motif, edge_positions: Tuple[int, ...]) -> int:
    """|(H restricted to the given hyperedge positions)^(2)|, computed on the motif itself.

    The value only depends on the positions because every copy is an isomorphic image.
    """
    return len({pair for position in edge_positions for pair in edge_pairs(motif.hyperedges[position])})
