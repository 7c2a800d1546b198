"""Homogeneous sums, degenerate U-statistics and the fourth-moment quantities built on them."""

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product
from typing import Any, Dict, Hashable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from networkx.utils import UnionFind

from malliavin_inspector.constants import (
    HC_BOUND,
    MAX_DECOMPOSITION_SUBSETS,
    MAX_QUADRUPLE_SUPPORTS,
    TOL_PIPELINE,
    TOL_STANDARDIZED,
)
from malliavin_inspector.exceptions import (
    ConditionFailed,
    DecompositionTooLarge,
    MalliavinError,
    MismatchedModel,
    NonProductForm,
    NotHomogeneous,
    NotPureChaos,
    NotStandardized,
    SizeCapExceeded,
)
from malliavin_inspector.models import Functional, ProductModel
from malliavin_inspector.models.functional import conditional_expectation_given_Z, expectation
from malliavin_inspector.operators import (
    carre_du_champ,
    chaos_decompose,
    cond_exp_excluding,
    cond_exp_given,
    fourth_difference_sum,
    generator_L,
)
from malliavin_inspector.utils import parallel_map

logger = logging.getLogger(__name__)

Support = Tuple[Hashable, ...]
Coefficient = Union[float, Sequence[float], np.ndarray]

SYMBOLIC_DEJONG_I = "C~_p * rho"
SYMBOLIC_DEJONG_II = "C_m"


@dataclass
class HomogeneousSum:
    """W = sum_I a_I prod_{i in I} X_i with 1 <= |I| <= degree.

    Attributes:
        degree: Maximal support size p
        coefficients: Support -> a_I, a constant or one value per latent state
    """

    degree: int
    coefficients: Dict[Support, Coefficient] = field(default_factory=dict)

    def __post_init__(self):
        if self.degree < 1:
            raise MalliavinError("Homogeneous sum degree must be at least 1")
        for support, coefficient in self.coefficients.items():
            if not 1 <= len(support) <= self.degree:
                raise MalliavinError(f"Support {support!r} has size outside 1..{self.degree}")
            if len(set(support)) != len(support):
                raise MalliavinError(f"Support {support!r} repeats an index")
            if not np.all(np.isfinite(np.asarray(coefficient, dtype=float))):
                raise MalliavinError(f"Coefficient of {support!r} is not finite")

    def latent_coefficient(self, model: ProductModel, support: Support) -> np.ndarray:
        """a_I as a vector over latent states."""
        values = np.asarray(self.coefficients[support], dtype=float).reshape(-1)
        if values.size == 1:
            return np.full(model.n_latent, float(values[0]))
        if values.size != model.n_latent:
            raise MalliavinError(f"Coefficient of {support!r} has {values.size} entries, model has {model.n_latent}")
        return values


def _sorted_support(model: ProductModel, support: Sequence[Hashable]) -> Support:
    return tuple(sorted(support, key=model.position))


def build_homogeneous_sum(model: ProductModel, spec: HomogeneousSum) -> Functional:
    """Functional W(z, x) = sum_I a_I(z) prod_{i in I} x_i, with spec attached as its source.

    Raises:
        UnknownIndex: When a support names an index outside the model
    """
    table = np.zeros(model.shape)
    for support in spec.coefficients:
        term = model.latent_function(spec.latent_coefficient(model, support)).table
        for index in support:
            term = term * model.values_grid(model.position(index))
        table = table + term
    return Functional(model, table, source=spec)


def _centered_product(model: ProductModel, support: Support) -> np.ndarray:
    table = np.ones((1,) * (model.n_components + 1))
    for index in support:
        table = table * model.centered_coordinate(index).table
    return table


@dataclass(frozen=True, eq=False)
class DegenerateUStat:
    """A degenerate U-statistic W_I of order |I|.

    When weight is set the kernel has product form weight(Z) prod_{i in I} Y_i with
    Y_i = X_i - E[X_i | Z].
    """

    support: Support
    kernel: Functional
    weight: Optional[np.ndarray] = None

    @property
    def order(self) -> int:
        return len(self.support)

    @property
    def model(self) -> ProductModel:
        return self.kernel.model

    @classmethod
    def product(cls, model: ProductModel, support: Sequence[Hashable], weight: Coefficient = 1.0) -> "DegenerateUStat":
        support = _sorted_support(model, support)
        weights = np.asarray(weight, dtype=float).reshape(-1)
        if weights.size == 1:
            weights = np.full(model.n_latent, float(weights[0]))
        kernel = Functional(model, model.latent_function(weights).table * _centered_product(model, support))
        return cls(support=support, kernel=kernel, weight=weights)

    def degeneracy_residual(self, keep: Sequence[Hashable]) -> float:
        """max |E[W_I | G_K]| for the conditioning set K = keep (with Z)."""
        return cond_exp_given(self.kernel, keep).max_abs()


class HoeffdingDecomposition(Mapping):
    """W = E[W | Z] + sum_I W_I for a homogeneous sum W."""

    def __init__(self, source: Functional, conditional_mean: Functional, terms: Dict[Support, DegenerateUStat]):
        self.source = source
        self.conditional_mean = conditional_mean
        self._terms = terms

    def __getitem__(self, support: Support) -> DegenerateUStat:
        return self._terms[support]

    def __iter__(self) -> Iterator[Support]:
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def chaos(self, p: int) -> Functional:
        """Sum of the W_I with |I| = p."""
        model = self.source.model
        total = model.constant(0.0)
        for support, term in self._terms.items():
            if len(support) == p:
                total = total + term.kernel
        return total

    def orders(self) -> List[int]:
        return sorted({len(support) for support in self._terms})

    def reconstruct(self) -> Functional:
        total = self.conditional_mean
        for term in self._terms.values():
            total = total + term.kernel
        return total


def hoeffding_decompose(W: Functional) -> HoeffdingDecomposition:
    """Hoeffding decomposition of a homogeneous sum through prod_I (Y_i + mu_i(Z)).

    W_K = c_K(Z) prod_{i in K} Y_i with c_K = sum_{I contains K} a_I prod_{i in I minus K} mu_i.
    Supports whose coefficient vanishes identically are dropped.

    Raises:
        NotHomogeneous: When W was not built from a HomogeneousSum
        DecompositionTooLarge: When the expansion needs more than 10^6 subsets
    """
    spec = W.source
    if not isinstance(spec, HomogeneousSum):
        raise NotHomogeneous("Functional carries no homogeneous-sum description")
    model = W.model
    expansion = sum(2 ** len(support) for support in spec.coefficients)
    if expansion > MAX_DECOMPOSITION_SUBSETS:
        raise DecompositionTooLarge(f"Expansion needs {expansion} subsets, limit is {MAX_DECOMPOSITION_SUBSETS}")
    means = {index: model.component(index).conditional_mean() for index in model.indices}
    weights: Dict[Support, np.ndarray] = {}
    for raw_support in spec.coefficients:
        support = _sorted_support(model, raw_support)
        coefficient = spec.latent_coefficient(model, raw_support)
        for kept in product((False, True), repeat=len(support)):
            sub = tuple(index for index, keep in zip(support, kept) if keep)
            factor = coefficient.copy()
            for index, keep in zip(support, kept):
                if not keep:
                    factor = factor * means[index]
            weights[sub] = weights.get(sub, np.zeros(model.n_latent)) + factor
    mean_weight = weights.pop((), np.zeros(model.n_latent))
    terms = {}
    for support in sorted(weights, key=lambda s: (len(s), [model.position(i) for i in s])):
        if np.max(np.abs(weights[support])) > 0:
            terms[support] = DegenerateUStat.product(model, support, weights[support])
    logger.debug("Hoeffding decomposition: %d non-zero supports", len(terms))
    return HoeffdingDecomposition(W, model.latent_function(mean_weight), terms)


def check_egf(F: Functional, p: int) -> bool:
    """True when F^2 has no chaos component above 2p.

    Raises:
        NotPureChaos: When |LF + pF| exceeds 1e-10 somewhere
    """
    if (generator_L(F) + p * F).max_abs() > TOL_PIPELINE:
        raise NotPureChaos(f"Functional is not an eigenfunction of L for eigenvalue -{p}")
    components = chaos_decompose(F * F).components
    return all(component.max_abs() <= TOL_PIPELINE for component in components[2 * p + 1 :])


def _items(components: Union[Mapping, Sequence]) -> List[Tuple[Support, Any]]:
    if isinstance(components, Mapping):
        return [(tuple(support), term) for support, term in components.items()]
    return [(tuple(term.support), term) for term in components]


def _supports_of(components: Union[Mapping, Sequence]) -> Tuple[List[Support], List[Functional]]:
    items = _items(components)
    supports = [support for support, _ in items]
    kernels = [term.kernel if isinstance(term, DegenerateUStat) else term for _, term in items]
    return supports, kernels


def _intersection_matrix(supports: Sequence[Support]) -> np.ndarray:
    sets = [set(support) for support in supports]
    size = len(sets)
    matrix = np.zeros((size, size), dtype=bool)
    for i in range(size):
        for j in range(i, size):
            matrix[i, j] = matrix[j, i] = bool(sets[i] & sets[j])
    return matrix


def _connected(slots: Sequence[int], meets: np.ndarray) -> bool:
    """Whether the intersection graph of the four slots is connected."""
    union = UnionFind(range(len(slots)))
    for i, first in enumerate(slots):
        for j in range(i + 1, len(slots)):
            if meets[first, slots[j]]:
                union.union(i, j)
    return len({union[i] for i in range(len(slots))}) == 1


def _check_support_count(supports: Sequence[Support]) -> None:
    if len(supports) > MAX_QUADRUPLE_SUPPORTS:
        raise SizeCapExceeded(len(supports), MAX_QUADRUPLE_SUPPORTS)


def connected_quadruples(supports: Sequence[Sequence[Hashable]]) -> Iterator[Tuple[Support, ...]]:
    """Ordered quadruples (I, J, K, L) of supports whose intersection graph is connected.

    Slots may repeat a support; two slots holding the same non-empty support intersect.
    """
    supports = [tuple(support) for support in supports]
    _check_support_count(supports)
    meets = _intersection_matrix(supports)
    for slots in product(range(len(supports)), repeat=4):
        if _connected(slots, meets):
            yield tuple(supports[i] for i in slots)


def _multiplicity(slots: Sequence[int]) -> int:
    counts = np.unique(slots, return_counts=True)[1]
    return math.factorial(len(slots)) // int(np.prod([math.factorial(int(c)) for c in counts]))


def connected_sum(components: Union[Mapping, Sequence], workers: int = 1) -> float:
    """sum over connected ordered quadruples of |E[W_I W_J W_K W_L]|.

    Connectivity and the expectation only depend on the multiset of slots, so each multiset
    is evaluated once and weighted by its number of orderings. Work is split over the first
    slot and reduced in slot order.
    """
    supports, kernels = _supports_of(components)
    if not supports:
        return 0.0
    _check_support_count(supports)
    meets = _intersection_matrix(supports)
    size = len(supports)

    def run(first: int) -> float:
        total = 0.0
        for rest in combinations_with_replacement(range(first, size), 3):
            slots = (first,) + rest
            if not _connected(slots, meets):
                continue
            value = expectation(kernels[slots[0]] * kernels[slots[1]] * kernels[slots[2]] * kernels[slots[3]])
            total += _multiplicity(slots) * abs(value)
        return total

    return float(sum(parallel_map(run, list(range(size)), workers)))


def maximal_influence(components: Union[Mapping, Sequence], p: Optional[int] = None) -> float:
    """rho^2 = max_i sum_{I contains i, |I| = p} E[W_I^2]; p defaults to the largest order."""
    supports, kernels = _supports_of(components)
    if not supports:
        return 0.0
    order = max(len(support) for support in supports) if p is None else p
    influence: Dict[Hashable, float] = {}
    for support, kernel in zip(supports, kernels):
        if len(support) != order:
            continue
        energy = expectation(kernel * kernel)
        for index in support:
            influence[index] = influence.get(index, 0.0) + energy
    return max(influence.values(), default=0.0)


def hc_ratio(components: Union[Mapping, Sequence], p: Optional[int] = None) -> float:
    """sup_{|J| = p} E[W_J^4] / E[W_J^2]^2 over terms with non-zero energy."""
    supports, kernels = _supports_of(components)
    order = max((len(support) for support in supports), default=0) if p is None else p
    ratio = 0.0
    for support, kernel in zip(supports, kernels):
        if len(support) != order:
            continue
        second = expectation(kernel * kernel)
        if second > 0:
            ratio = max(ratio, expectation(kernel**4) / second**2)
    return ratio


def h2_kappa(components: Union[Mapping, Sequence]) -> float:
    """kappa = sup_{I, J} E[W_I^2] E[W_J^2] / E[W_I^2 W_J^2]; infinite when a cross moment vanishes."""
    _, kernels = _supports_of(components)
    squares = [kernel * kernel for kernel in kernels]
    energies = [expectation(square) for square in squares]
    kappa = 0.0
    for i, first in enumerate(squares):
        for j in range(i, len(squares)):
            numerator = energies[i] * energies[j]
            if numerator <= 0:
                continue
            cross = expectation(first * squares[j])
            if cross <= 0:
                return math.inf
            kappa = max(kappa, numerator / cross)
    return kappa


def _check_standardized(F: Functional) -> None:
    second = expectation(F * F)
    worst_mean = float(np.max(np.abs(conditional_expectation_given_Z(F))))
    if abs(second - 1.0) > TOL_STANDARDIZED or worst_mean > TOL_STANDARDIZED:
        raise NotStandardized(f"E[F^2] = {second:.6f}, max |E[F|Z]| = {worst_mean:.3e}")


@dataclass
class FourthMomentReport:
    """Exact fourth-moment quantities of a standardized functional and its Hoeffding terms.

    The proposition bound only applies when F lies in a single chaos (order set) and
    satisfies the eigenfunction condition on F^2.
    """

    fourth_moment: float
    fourth_moment_gap: float
    var_gamma: float
    fourth_difference_sum: float
    maximal_influence: float
    hc_ratio: float
    h2_kappa: float
    connected_sum: float
    order: Optional[int] = None
    egf: Optional[bool] = None

    @property
    def proposition_rhs(self) -> Optional[float]:
        """(p^2/3)|E F^4 - 3| + (p/12) sum_a E|Delta^a F|^4."""
        if self.order is None:
            return None
        p = self.order
        return p**2 / 3.0 * abs(self.fourth_moment - 3.0) + p / 12.0 * self.fourth_difference_sum

    @property
    def proposition_holds(self) -> Optional[bool]:
        if self.order is None or not self.egf:
            return None
        return self.var_gamma <= self.proposition_rhs + TOL_PIPELINE

    @property
    def influence_rhs(self) -> float:
        return 16.0 * (self.order or 0) * self.connected_sum

    @property
    def influence_holds(self) -> bool:
        return self.fourth_difference_sum <= self.influence_rhs + TOL_PIPELINE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fourth_moment": self.fourth_moment,
            "fourth_moment_gap": self.fourth_moment_gap,
            "var_gamma": self.var_gamma,
            "fourth_difference_sum": self.fourth_difference_sum,
            "maximal_influence": self.maximal_influence,
            "hc_ratio": self.hc_ratio,
            "h2_kappa": self.h2_kappa,
            "connected_sum": self.connected_sum,
            "order": self.order,
            "egf": self.egf,
            "proposition_rhs": self.proposition_rhs,
            "proposition_holds": self.proposition_holds,
            "influence_rhs": self.influence_rhs,
            "influence_holds": self.influence_holds,
        }


def fourth_moment_report(
    F: Functional,
    components: Union[Mapping, Sequence],
    workers: int = 1,
) -> FourthMomentReport:
    """Compute every fourth-moment quantity of a standardized F.

    components are its Hoeffding terms W_I (DegenerateUStat values or plain functionals).
    order is the largest support size; the eigenfunction test runs only when F is an
    eigenfunction of L for that order.

    Raises:
        NotStandardized: When E[F|Z] != 0 or E[F^2] != 1 within 1e-8
    """
    _check_standardized(F)
    supports, _ = _supports_of(components)
    order = max((len(support) for support in supports), default=None)
    fourth = expectation(F**4)
    second = expectation(F * F)
    gamma = carre_du_champ(F, F)
    egf = None
    var_gamma = expectation((gamma - expectation(gamma)) ** 2)
    if order is not None:
        try:
            egf = check_egf(F, order)
            var_gamma = expectation((gamma - order) ** 2)
        except NotPureChaos:
            egf = None
    report = FourthMomentReport(
        fourth_moment=fourth,
        fourth_moment_gap=abs(fourth - 3.0 * second**2),
        var_gamma=var_gamma,
        fourth_difference_sum=fourth_difference_sum(F),
        maximal_influence=maximal_influence(components, order),
        hc_ratio=hc_ratio(components, order),
        h2_kappa=h2_kappa(components),
        connected_sum=connected_sum(components, workers=workers),
        order=order,
        egf=egf,
    )
    logger.debug("Fourth-moment report: %s", report.to_dict())
    return report


def check_h1(components: Union[Mapping, Sequence], a: Hashable) -> Tuple[bool, float]:
    """Boundedness of E[W_I W_J | G^a] / (W_{I minus a} W_{J minus a}) over pairs with a in I and J.

    The reduced kernel W_{I minus a} is the listed component on that support, or the
    unit-weight product prod Y_i when W_I has product form; W of the empty support is 1.

    Returns:
        (bounded, max |C_{I,J,a}|); (True, 0.0) when no pair contains a

    Raises:
        NonProductForm: When a reduced kernel is unavailable or vanishes identically
    """
    terms = {}
    for support, raw in _items(components):
        if isinstance(raw, DegenerateUStat):
            terms[support] = (raw.kernel, raw.weight)
        else:
            terms[support] = (raw, None)
    holding = [support for support in terms if a in support]
    if not holding:
        return True, 0.0
    model = terms[holding[0]][0].model

    def reduced(support: Support) -> Functional:
        rest = tuple(index for index in support if index != a)
        if not rest:
            return model.constant(1.0)
        if rest in terms:
            return terms[rest][0]
        if terms[support][1] is not None:
            return Functional(model, _centered_product(model, rest))
        raise NonProductForm(f"No reduced kernel for support {rest!r}")

    constant = 0.0
    for first in holding:
        for second in holding:
            if terms[first][0].model is not terms[second][0].model:
                raise MismatchedModel("Components belong to different models")
            numerator = cond_exp_excluding(terms[first][0] * terms[second][0], a).table
            denominator = (reduced(first) * reduced(second)).table
            if np.max(np.abs(denominator)) <= TOL_PIPELINE:
                raise NonProductForm(f"Reduced kernels vanish identically for {first!r}, {second!r}")
            support_mask = np.abs(denominator) > TOL_PIPELINE
            if np.any(np.abs(numerator[~support_mask]) > TOL_PIPELINE):
                return False, math.inf
            ratios = np.abs(numerator[support_mask] / denominator[support_mask])
            constant = max(constant, float(np.max(ratios)))
    return True, constant


@dataclass
class DeJongQuantities:
    """Explicit parts of the two quantitative De Jong bounds.

    dejong_i_explicit is sqrt(2/(3 pi)) sqrt|E F^4 - 3|, to which C~_p rho is added;
    dejong_ii_radicand is the connected sum under the square root, multiplied by C_m.
    Neither constant is numeric.
    """

    connected_sum: float
    fourth_moment_gap: float
    rho: float
    dejong_i_explicit: Optional[float]
    dejong_ii_radicand: float
    hc_ratio: float = 0.0
    hc_bound: float = HC_BOUND
    h2_kappa: float = 0.0
    conditions: Dict[str, bool] = field(default_factory=dict)
    symbolic: Dict[str, str] = field(
        default_factory=lambda: {"dejong_i": SYMBOLIC_DEJONG_I, "dejong_ii": SYMBOLIC_DEJONG_II}
    )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "connected_sum": self.connected_sum,
            "fourth_moment_gap": self.fourth_moment_gap,
            "rho": self.rho,
            "dejong_i_explicit": self.dejong_i_explicit,
            "dejong_ii_radicand": self.dejong_ii_radicand,
            "hc_ratio": self.hc_ratio,
            "hc_bound": self.hc_bound,
            "h2_kappa": self.h2_kappa,
            "conditions": self.conditions,
            "symbolic": self.symbolic,
        }


def _egf_holds(model: ProductModel, supports: Sequence[Support], kernels: Sequence[Functional]) -> bool:
    """EGF for every chaos component; a component that is not an eigenfunction of L fails it."""
    for p in sorted({len(support) for support in supports}):
        chaos = model.constant(0.0)
        for support, kernel in zip(supports, kernels):
            if len(support) == p:
                chaos = chaos + kernel
        try:
            if not check_egf(chaos, p):
                return False
        except NotPureChaos:
            return False
    return True


def dejong_quantities(
    F: Functional,
    components: Union[Mapping, Sequence],
    strict: bool = True,
    workers: int = 1,
    hc_bound: float = HC_BOUND,
) -> DeJongQuantities:
    """Connected sum, De Jong I explicit part and De Jong II radicand.

    De Jong I needs F in a single chaos with EGF and HC, De Jong II needs EGF for every
    chaos component together with H1 and H2. HC holds when the largest ratio
    E[W_J^4] / E[W_J^2]^2 stays within hc_bound. With strict the first failing condition
    is raised, otherwise failures are only recorded in conditions.

    Raises:
        NotStandardized: When F is not standardized
        ConditionFailed: Naming EGF, HC, H1 or H2
    """
    if not hc_bound > 0:
        raise MalliavinError(f"hc_bound must be positive, got {hc_bound}")
    _check_standardized(F)
    supports, kernels = _supports_of(components)
    model = F.model
    orders = sorted({len(support) for support in supports})
    ratio = hc_ratio(components) if supports else 0.0
    kappa = h2_kappa(components) if supports else 0.0
    conditions: Dict[str, bool] = {"EGF": _egf_holds(model, supports, kernels), "HC": ratio <= hc_bound}
    h1 = True
    for a in model.indices:
        if any(a in support for support in supports):
            bounded, _ = check_h1(components, a)
            h1 = h1 and bounded
    conditions["H1"] = h1
    conditions["H2"] = math.isfinite(kappa)
    details = {
        "EGF": None,
        "HC": f"ratio {ratio:.4e} exceeds bound {hc_bound:g}",
        "H1": "E[W_I W_J | G^a] is not bounded by the reduced kernels",
        "H2": "a cross moment E[W_I^2 W_J^2] vanishes",
    }
    for name in ("EGF", "HC", "H1", "H2"):
        if strict and not conditions[name]:
            raise ConditionFailed(name, details[name])
        if not conditions[name]:
            logger.warning("Condition %s does not hold", name)

    fourth = expectation(F**4)
    gap = abs(fourth - 3.0)
    explicit = None
    if len(orders) == 1 and conditions["EGF"] and conditions["HC"]:
        explicit = math.sqrt(2.0 / (3.0 * math.pi)) * math.sqrt(gap)
    total = connected_sum(components, workers=workers)
    return DeJongQuantities(
        connected_sum=total,
        fourth_moment_gap=gap,
        rho=math.sqrt(maximal_influence(components)),
        dejong_i_explicit=explicit,
        dejong_ii_radicand=total,
        hc_ratio=ratio,
        hc_bound=hc_bound,
        h2_kappa=kappa,
        conditions=conditions,
    )


@dataclass
class HermiteIdentity:
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def hermite_identity(F: Functional, p: int) -> HermiteIdentity:
    """Both sides of E[H_2(F)(L + 2p)H_2(F)] = p E[2(F^2 - 1)^2 - (4/3)F^4] + (1/6) sum_a E|Delta^a F|^4.

    H_2(x) = x^2 - 1.

    Raises:
        NotPureChaos: When F is not an eigenfunction of L for eigenvalue -p
    """
    if (generator_L(F) + p * F).max_abs() > TOL_PIPELINE:
        raise NotPureChaos(f"Functional is not an eigenfunction of L for eigenvalue -{p}")
    hermite = F * F - 1.0
    lhs = expectation(hermite * (generator_L(hermite) + 2 * p * hermite))
    rhs = p * expectation(2.0 * hermite**2 - (4.0 / 3.0) * F**4) + fourth_difference_sum(F) / 6.0
    return HermiteIdentity(lhs=lhs, rhs=rhs)


@dataclass
class SandwichCheck:
    """A = E[G(L + eta)^2 G] and B = E[G(L + eta)G] for G in the chaoses up to q.

    lower: A <= eta B (eta >= q); upper: B <= A / (eta - q) (eta > q only).
    """

    a_value: float
    b_value: float
    eta: float
    q: int

    @property
    def lower_holds(self) -> bool:
        return self.a_value <= self.eta * self.b_value + TOL_PIPELINE

    @property
    def upper_holds(self) -> Optional[bool]:
        if self.eta <= self.q:
            return None
        return self.b_value <= self.a_value / (self.eta - self.q) + TOL_PIPELINE


def sandwich_check(G: Functional, eta: float, q: int) -> SandwichCheck:
    """Evaluate both sides of the spectral sandwich for G.

    Raises:
        NotPureChaos: When G has a chaos component above q
    """
    if eta < q:
        raise MalliavinError(f"Sandwich needs eta >= q, got eta={eta}, q={q}")
    components = chaos_decompose(G).components
    if any(component.max_abs() > TOL_PIPELINE for component in components[q + 1 :]):
        raise NotPureChaos(f"Functional has chaos components above {q}")
    shifted = generator_L(G) + eta * G
    return SandwichCheck(
        a_value=expectation(shifted * shifted),
        b_value=expectation(G * shifted),
        eta=float(eta),
        q=q,
    )
