"""Malliavin operators on finite conditional-product models.

Every operator is exact: it acts on the dense table of a Functional and returns a new
dense Functional. Conditional expectations integrate coordinates out against their
z-dependent conditional pmfs, so the latent axis is never averaged.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from malliavin_inspector.constants import (
    MAX_CHAOS_COMPONENTS,
    QUADRATURE_HORIZON,
    TOL_OPERATOR,
    TOL_PIPELINE,
)
from malliavin_inspector.exceptions import (
    IndexOutOfRange,
    MismatchedModel,
    NegativeTime,
    NotCentered,
    SizeCapExceeded,
)
from malliavin_inspector.models import Functional, ProductModel, SimpleProcess
from malliavin_inspector.models.functional import conditional_expectation_given_Z, expectation
from malliavin_inspector.utils import mask_members, popcount

logger = logging.getLogger(__name__)


def _same_model(*functionals: Functional) -> ProductModel:
    model = functionals[0].model
    for other in functionals[1:]:
        if other.model is not model:
            raise MismatchedModel("Functionals belong to different models")
    return model


def _integrate_axis(model: ProductModel, table: np.ndarray, position: int) -> np.ndarray:
    """Integrate coordinate `position` out of a (possibly reduced) table, keeping the axis."""
    weights = model.weights(position)
    return np.sum(table * weights, axis=position + 1, keepdims=True)


def integrate_out(F: Functional, positions: Iterable[int]) -> Functional:
    """E[F | Z, X_b for b not in positions]."""
    table = F.table
    for position in positions:
        table = _integrate_axis(F.model, table, position)
    return Functional(F.model, table)


def cond_exp_excluding(F: Functional, a: Hashable) -> Functional:
    """E[F | G^a], where G^a is generated by Z and every coordinate except X_a.

    Raises:
        UnknownIndex: When a is not an index of the model
    """
    return integrate_out(F, [F.model.position(a)])


def cond_exp_given(F: Functional, keep: Iterable[Hashable]) -> Functional:
    """E[F | Z, X_K] for the index set K = keep."""
    model = F.model
    kept = {model.position(index) for index in keep}
    return integrate_out(F, [p for p in range(model.n_components) if p not in kept])


def gradient(F: Functional, a: Hashable) -> Functional:
    """D_a F = F - E[F | G^a]."""
    return F - cond_exp_excluding(F, a)


def gradient_process(F: Functional) -> SimpleProcess:
    """DF as the simple process (D_a F)_a."""
    return SimpleProcess(F.model, {a: gradient(F, a) for a in F.model.indices})


def divergence(U: SimpleProcess) -> Functional:
    """delta U = sum_a D_a U_a.

    Raises:
        MismatchedModel: When an entry of U lives on another model
    """
    model = U.model
    total = model.constant(0.0)
    for a in model.indices:
        entry = U[a]
        if entry.model is not model:
            raise MismatchedModel(f"Entry for index {a!r} belongs to another model")
        total = total + gradient(entry, a)
    return total


def generator_L(F: Functional) -> Functional:
    """LF = -sum_a D_a F."""
    model = F.model
    table = np.zeros(model.shape)
    for position in range(model.n_components):
        table = table - (F.table - _integrate_axis(model, F.table, position))
    return Functional(model, table)


def iterated_gradient(F: Functional, indices: Sequence[Hashable]) -> Functional:
    """prod_{a in J} D_a F by successive composition."""
    result = F
    for a in indices:
        result = gradient(result, a)
    return result


def iterated_gradient_mobius(F: Functional, indices: Sequence[Hashable]) -> Functional:
    """prod_{a in J} D_a F = sum_{K subset J} (-1)^{|K|} E[F | everything but X_K]."""
    model = F.model
    positions = sorted({model.position(a) for a in indices})
    table = np.zeros(model.shape)
    for size in range(len(positions) + 1):
        sign = -1.0 if size % 2 else 1.0
        for subset in combinations(positions, size):
            reduced = F.table
            for position in subset:
                reduced = _integrate_axis(model, reduced, position)
            table = table + sign * reduced
    return Functional(model, table)


@dataclass(frozen=True, eq=False)
class ChaosDecomposition:
    """Chaos decomposition of a functional.

    Attributes:
        source: The decomposed functional
        components: pi_0 F, ..., pi_m F as dense functionals
        terms: Reduced Hoeffding terms psi_J, keyed by the index tuple J; each array
            keeps only the axes of J (others have length one)
    """

    source: Functional
    components: Tuple[Functional, ...]
    terms: Dict[Tuple[Hashable, ...], np.ndarray]

    @property
    def order(self) -> int:
        """Highest n with a non-zero component."""
        nonzero = [n for n, component in enumerate(self.components) if component.max_abs() > TOL_PIPELINE]
        return max(nonzero) if nonzero else 0

    def __getitem__(self, n: int) -> Functional:
        return self.components[n]

    def __len__(self) -> int:
        return len(self.components)

    def term(self, support: Sequence[Hashable]) -> Functional:
        """psi_J as a dense functional (zero when J is absent)."""
        model = self.source.model
        key = tuple(sorted(support, key=model.position))
        if key not in self.terms:
            return model.constant(0.0)
        return Functional(model, self.terms[key])

    def nonzero_terms(self, tol: float = TOL_PIPELINE) -> Dict[Tuple[Hashable, ...], Functional]:
        """Non-vanishing psi_J for |J| >= 1."""
        model = self.source.model
        return {
            support: Functional(model, table)
            for support, table in self.terms.items()
            if support and np.max(np.abs(table)) > tol
        }

    def reconstruct(self) -> Functional:
        total = self.components[0]
        for component in self.components[1:]:
            total = total + component
        return total


@lru_cache(maxsize=64)
def chaos_decompose(F: Functional) -> ChaosDecomposition:
    """Full chaos decomposition by the Moebius transform over index subsets.

    g(K) = E[F | Z, X_K] is computed for every K, each stored with only the axes of K.
    The Moebius transform psi_J = sum_{K subset J} (-1)^{|J|-|K|} g(K) gives the Hoeffding
    terms, and pi_n F = sum_{|J| = n} psi_J.

    Raises:
        SizeCapExceeded: When |A| exceeds the subset-enumeration limit
    """
    model = F.model
    m = model.n_components
    if m > MAX_CHAOS_COMPONENTS:
        raise SizeCapExceeded(2**m, 2**MAX_CHAOS_COMPONENTS)
    full = (1 << m) - 1
    conditionals: List[Optional[np.ndarray]] = [None] * (1 << m)
    conditionals[full] = F.table
    for mask in range(full - 1, -1, -1):
        # Integrate one missing coordinate out of a superset's conditional
        missing = next(p for p in range(m) if not mask >> p & 1)
        parent = conditionals[mask | (1 << missing)]
        conditionals[mask] = _integrate_axis(model, parent, missing)

    terms = list(conditionals)
    for bit in range(m):
        step = 1 << bit
        for mask in range(1 << m):
            if mask & step:
                terms[mask] = terms[mask] - terms[mask ^ step]

    components = [np.zeros(model.shape) for _ in range(m + 1)]
    keyed: Dict[Tuple[Hashable, ...], np.ndarray] = {}
    for mask, table in enumerate(terms):
        support = tuple(model.indices[p] for p in mask_members(mask))
        keyed[support] = table
        components[popcount(mask)] = components[popcount(mask)] + table
    logger.debug("Chaos decomposition over %d subsets, %d cells", 1 << m, model.n_cells)
    return ChaosDecomposition(
        source=F,
        components=tuple(Functional(model, component) for component in components),
        terms=keyed,
    )


def chaos_projector(F: Functional, n: int) -> Functional:
    """pi_n F, the projection of F onto the n-th chaos.

    Raises:
        IndexOutOfRange: When n is outside 0..|A|
    """
    m = F.model.n_components
    if not 0 <= n <= m:
        raise IndexOutOfRange(f"Chaos order {n} outside 0..{m}")
    return chaos_decompose(F).components[n]


def chaos_projector_composition(F: Functional, n: int) -> Functional:
    """pi_n F = sum_{|J| = n} (prod_{b in J} D_b)(prod_{c not in J} E[. | G^c]) F."""
    model = F.model
    m = model.n_components
    if not 0 <= n <= m:
        raise IndexOutOfRange(f"Chaos order {n} outside 0..{m}")
    total = model.constant(0.0)
    for support in combinations(model.indices, n):
        projected = F
        for c in model.indices:
            if c not in support:
                projected = cond_exp_excluding(projected, c)
        total = total + iterated_gradient(projected, support)
    return total


def chaos_order(F: Functional, tol: float = TOL_PIPELINE) -> Optional[int]:
    """p when F lies in the single chaos p (|LF + pF| <= tol), else None."""
    decomposition = chaos_decompose(F)
    nonzero = [n for n, component in enumerate(decomposition.components) if component.max_abs() > tol]
    if len(nonzero) != 1:
        return 0 if not nonzero else None
    return nonzero[0]


def _check_centered(F: Functional, tol: float = TOL_PIPELINE) -> None:
    means = conditional_expectation_given_Z(F)
    worst = float(np.max(np.abs(means)))
    if worst > tol:
        raise NotCentered(f"max |E[F|Z=z]| = {worst:.3e} exceeds {tol:.0e}")


def inverse_L(F: Functional) -> Functional:
    """L^{-1} F = -sum_{n >= 1} pi_n F / n on conditionally centered F.

    Raises:
        NotCentered: When max_z |E[F | Z = z]| exceeds 1e-10
    """
    _check_centered(F)
    decomposition = chaos_decompose(F)
    table = np.zeros(F.model.shape)
    for n, component in enumerate(decomposition.components[1:], start=1):
        table = table - component.table / n
    return Functional(F.model, table)


def carre_du_champ(F: Functional, G: Functional) -> Functional:
    """Gamma(F, G) = (L(FG) - F LG - G LF) / 2."""
    _same_model(F, G)
    return 0.5 * (generator_L(F * G) - F * generator_L(G) - G * generator_L(F))


def _differences(F: Functional, position: int) -> np.ndarray:
    """F(z, x) - F(z, x with coordinate `position` replaced by x'), with x' on a trailing axis."""
    table = F.table
    replaced = np.expand_dims(np.moveaxis(table, position + 1, -1), position + 1)
    return table[..., None] - replaced


def difference_expectation(
    F: Functional,
    a: Hashable,
    fn: Callable[[np.ndarray], np.ndarray],
) -> Functional:
    """E[fn(Delta^a F(X, X'_a)) | X, Z] where X'_a is an independent conditional copy."""
    model = F.model
    position = model.position(a)
    weights = model.components[position].cond_pmf
    shape = [model.n_latent] + [1] * model.n_components + [weights.shape[1]]
    return Functional(model, np.sum(fn(_differences(F, position)) * weights.reshape(shape), axis=-1))


def difference_moment(F: Functional, a: Hashable, k: int, absolute: bool = False) -> Functional:
    """E[(Delta^a F)^k | X, Z], or E[|Delta^a F|^k | X, Z] when absolute.

    With k = 1 and no absolute value this reproduces the gradient D_a F.
    """
    if k < 1:
        raise ValueError("Moment order must be at least 1")
    if absolute:
        return difference_expectation(F, a, lambda d: np.abs(d) ** k)
    return difference_expectation(F, a, lambda d: d**k)


def mixed_difference_moment(F: Functional, G: Functional, a: Hashable) -> Functional:
    """E[|Delta^a G| (Delta^a F)^2 | X, Z]."""
    model = _same_model(F, G)
    position = model.position(a)
    weights = model.components[position].cond_pmf
    shape = [model.n_latent] + [1] * model.n_components + [weights.shape[1]]
    values = np.abs(_differences(G, position)) * _differences(F, position) ** 2
    return Functional(model, np.sum(values * weights.reshape(shape), axis=-1))


def difference_product(F: Functional, G: Functional, a: Hashable) -> Functional:
    """E[Delta^a F Delta^a G | X, Z]."""
    model = _same_model(F, G)
    position = model.position(a)
    weights = model.components[position].cond_pmf
    shape = [model.n_latent] + [1] * model.n_components + [weights.shape[1]]
    values = _differences(F, position) * _differences(G, position)
    return Functional(model, np.sum(values * weights.reshape(shape), axis=-1))


def carre_du_champ_difference(F: Functional, G: Functional) -> Functional:
    """Gamma(F, G) = (1/2) sum_a E[Delta^a F Delta^a G | X, Z]."""
    model = _same_model(F, G)
    total = model.constant(0.0)
    for a in model.indices:
        total = total + difference_product(F, G, a)
    return 0.5 * total


def fourth_difference_sum(F: Functional) -> float:
    """sum_a E|Delta^a F|^4."""
    return sum(expectation(difference_moment(F, a, 4, absolute=True)) for a in F.model.indices)


def dirichlet_form(F: Functional, G: Functional) -> float:
    """E[Gamma(F, G)]."""
    return expectation(carre_du_champ(F, G))


def semigroup_Pt(F: Functional, t: float) -> Functional:
    """Mehler's formula P_t F = E[F|Z] + sum_{n >= 1} e^{-nt} pi_n F.

    Raises:
        NegativeTime: When t < 0
    """
    if t < 0:
        raise NegativeTime(f"Semigroup time must be non-negative, got {t}")
    decomposition = chaos_decompose(F)
    table = np.array(decomposition.components[0].table)
    for n, component in enumerate(decomposition.components[1:], start=1):
        table = table + math.exp(-n * t) * component.table
    return Functional(F.model, table)


def semigroup_Pt_frozen(F: Functional, t: float, a: Hashable) -> Functional:
    """Semigroup of the dynamics in which coordinate a is never refreshed.

    Each Hoeffding term psi_J decays as e^{-|J minus {a}| t}.
    """
    if t < 0:
        raise NegativeTime(f"Semigroup time must be non-negative, got {t}")
    model = F.model
    model.position(a)
    decomposition = chaos_decompose(F)
    table = np.zeros(model.shape)
    for support, term in decomposition.terms.items():
        live = len(support) - (1 if a in support else 0)
        table = table + math.exp(-live * t) * term
    return Functional(model, table)


def commutation_residual(F: Functional, a: Hashable, t: float) -> float:
    """max |D_a P_t F - e^{-t} P~^{(a)}_t D_a F| over cells."""
    lhs = gradient(semigroup_Pt(F, t), a)
    rhs = math.exp(-t) * semigroup_Pt_frozen(gradient(F, a), t, a)
    return (lhs - rhs).max_abs()


def inverse_L_quadrature(F: Functional, horizon: float = QUADRATURE_HORIZON) -> Functional:
    """L^{-1} F = -int_0^inf P_t F dt for conditionally centered F, by adaptive quadrature."""
    _check_centered(F)
    decomposition = chaos_decompose(F)
    tables = np.stack([component.table.reshape(-1) for component in decomposition.components[1:]])
    orders = np.arange(1, tables.shape[0] + 1, dtype=float)

    def integrand(t: float) -> np.ndarray:
        return np.exp(-orders * t) @ tables

    values, _ = integrate.quad_vec(integrand, 0.0, horizon, epsabs=1e-13, epsrel=1e-12)
    return Functional(F.model, -values.reshape(F.model.shape))


def single_particle_remark(F: Functional, t: float) -> float:
    """With one coordinate, D_a P_t F = e^{-t} D_a F; returns the residual.

    Logged as information only: for |A| = 1 the frozen semigroup is the identity.
    """
    model = F.model
    if model.n_components != 1:
        raise ValueError("Single-particle check needs a one-coordinate model")
    a = model.indices[0]
    residual = (gradient(semigroup_Pt(F, t), a) - math.exp(-t) * gradient(F, a)).max_abs()
    logger.info("Single-particle commutation residual at t=%.3f: %.3e", t, residual)
    return residual


def operator_residuals(F: Functional, U: SimpleProcess, tol: float = TOL_OPERATOR) -> Dict[str, float]:
    """Largest residuals of the basic gradient identities and integration by parts for (F, U)."""
    model = F.model
    if U.model is not model:
        raise MismatchedModel("Process and functional belong to different models")
    idempotence = 0.0
    centering = 0.0
    commutation = 0.0
    for a in model.indices:
        grad = gradient(F, a)
        idempotence = max(idempotence, (gradient(grad, a) - grad).max_abs())
        centering = max(centering, cond_exp_excluding(grad, a).max_abs())
        for b in model.indices:
            if b != a:
                commutation = max(commutation, (gradient(grad, b) - gradient(gradient(F, b), a)).max_abs())
    lhs = expectation(gradient_process(F).inner(U))
    rhs = expectation(F * divergence(U))
    residuals = {
        "idempotence": idempotence,
        "centering": centering,
        "commutation": commutation,
        "integration_by_parts": abs(lhs - rhs),
    }
    if max(residuals.values()) > tol:
        logger.debug("Operator residuals above %.0e: %s", tol, residuals)
    return residuals