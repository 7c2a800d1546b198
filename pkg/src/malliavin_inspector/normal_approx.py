import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

from malliavin_inspector.constants import (
    LYAPUNOV_CONSTANT,
    MAX_EXACT_LAW_SUPPORT,
    TOL_PIPELINE,
    TOL_STANDARDIZED,
)
from malliavin_inspector.exceptions import DegenerateVariance, MalliavinError, NotPureChaos, NotStandardized
from malliavin_inspector.models import Functional, ProductModel, conditional_bernoulli
from malliavin_inspector.models.functional import conditional_expectation_given_Z, expectation, variance
from malliavin_inspector.operators import (
    ChaosDecomposition,
    carre_du_champ,
    carre_du_champ_difference,
    difference_moment,
    fourth_difference_sum,
    generator_L,
    inverse_L,
    mixed_difference_moment,
)
from malliavin_inspector.utils import parallel_map, spawn_streams, split_counts

logger = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample values carrying equal mass 1/m each."""

    values: np.ndarray

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=float).reshape(-1))
        if values.size == 0:
            raise MalliavinError("Empirical distribution needs at least one value")
        if not np.all(np.isfinite(values)):
            raise MalliavinError("Empirical distribution values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def as_law(self) -> Tuple[np.ndarray, np.ndarray]:
        atoms, counts = np.unique(self.values, return_counts=True)
        return atoms, counts / self.values.size

    def shifted(self, c: float) -> "EmpiricalDistribution":
        return EmpiricalDistribution(self.values + c)


FiniteLaw = Tuple[np.ndarray, np.ndarray]
Distribution = Union[EmpiricalDistribution, FiniteLaw]


def _as_law(dist: Distribution) -> FiniteLaw:
    if isinstance(dist, EmpiricalDistribution):
        return dist.as_law()
    atoms, probs = dist
    atoms = np.asarray(atoms, dtype=float).reshape(-1)
    probs = np.asarray(probs, dtype=float).reshape(-1)
    if atoms.size == 0 or atoms.size != probs.size:
        raise MalliavinError("A finite law needs matching, non-empty atoms and probabilities")
    order = np.argsort(atoms, kind="stable")
    return atoms[order], probs[order]


def _normal_pdf(x: np.ndarray) -> np.ndarray:
    return INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


def _phi_antiderivative(x: np.ndarray) -> np.ndarray:
    """x Phi(x) + phi(x), an antiderivative of the standard normal CDF."""
    return x * special.ndtr(x) + _normal_pdf(x)


def w1_to_std_normal(dist: Distribution) -> float:
    """Exact 1-Wasserstein distance between a finite law and N(0, 1).

    Between consecutive atoms the CDF is a constant c, and |c - Phi| changes sign once, at
    Phi^{-1}(c); each side integrates in closed form through x Phi(x) + phi(x).
    """
    atoms, probs = _as_law(dist)
    cdf = np.clip(np.cumsum(probs), 0.0, 1.0)
    cdf[-1] = 1.0
    left_tail = float(_phi_antiderivative(atoms[0]))
    last = atoms[-1]
    right_tail = float(_normal_pdf(last) - last * special.ndtr(-last))
    if atoms.size == 1:
        return left_tail + right_tail
    lo = atoms[:-1]
    hi = atoms[1:]
    level = cdf[:-1]
    crossing = np.clip(special.ndtri(level), lo, hi)
    g_lo = _phi_antiderivative(lo)
    g_mid = _phi_antiderivative(crossing)
    g_hi = _phi_antiderivative(hi)
    below = np.abs(level * (crossing - lo) - (g_mid - g_lo))
    above = np.abs((g_hi - g_mid) - level * (hi - crossing))
    return left_tail + float(np.sum(below + above)) + right_tail


def w1_between(first: Distribution, second: Distribution) -> float:
    """Exact 1-Wasserstein distance between two finite laws: integral of |F_1 - F_2|."""
    atoms_a, probs_a = _as_law(first)
    atoms_b, probs_b = _as_law(second)
    grid = np.union1d(atoms_a, atoms_b)
    cdf_a = np.concatenate([[0.0], np.cumsum(probs_a)])[np.searchsorted(atoms_a, grid, side="right")]
    cdf_b = np.concatenate([[0.0], np.cumsum(probs_b)])[np.searchsorted(atoms_b, grid, side="right")]
    return float(np.sum(np.abs(cdf_a - cdf_b)[:-1] * np.diff(grid)))


def exact_w1(F: Functional) -> float:
    """d_W between the finite law of F and N(0, 1)."""
    atoms, probs = F.law()
    if atoms.size > MAX_EXACT_LAW_SUPPORT:
        raise MalliavinError(f"Law of F has {atoms.size} atoms, exact W1 is limited to {MAX_EXACT_LAW_SUPPORT}")
    return w1_to_std_normal((atoms, probs))


def lyapunov_bound(model: ProductModel) -> float:
    """2(sqrt 2 + 1) E[s_{n,Z}^{-3} sum_i E(|X_i - E[X_i|Z]|^3 | Z)].

    Bound for the normalized sum sum_i (X_i - E[X_i|Z]) / s_{n,Z}, with
    s_{n,Z}^2 = sum_i Var(X_i | Z). Only component marginals are used, so models with
    thousands of coordinates are fine.

    Raises:
        DegenerateVariance: When s_{n,Z} = 0 for some latent state
    """
    variances = np.zeros(model.n_latent)
    third = np.zeros(model.n_latent)
    for component in model.components:
        variances = variances + component.conditional_central_moment(2)
        third = third + component.conditional_central_moment(3, absolute=True)
    if np.any(variances <= 0):
        bad = int(np.flatnonzero(variances <= 0)[0])
        raise DegenerateVariance(f"Conditional variance vanishes for latent state {bad}")
    per_state = third / variances**1.5
    return LYAPUNOV_CONSTANT * float(model.latent.probs @ per_state)


def normalized_sum(model: ProductModel) -> Functional:
    """sum_i (X_i - E[X_i|Z]) / s_{n,Z} as a functional."""
    variances = np.zeros(model.n_latent)
    for component in model.components:
        variances = variances + component.conditional_central_moment(2)
    if np.any(variances <= 0):
        raise DegenerateVariance("Conditional variance vanishes for some latent state")
    total = model.constant(0.0)
    for index in model.indices:
        total = total + model.centered_coordinate(index)
    return total * model.latent_function(1.0 / np.sqrt(variances))


def bernoulli_lyapunov_constant(
    latent_values: Sequence[float],
    latent_probs: Optional[Sequence[float]] = None,
) -> float:
    """E[(1 - 2Z + 2Z^2) / sqrt(Z(1 - Z))]."""
    z = np.asarray(latent_values, dtype=float)
    probs = np.full(z.size, 1.0 / z.size) if latent_probs is None else np.asarray(latent_probs, dtype=float)
    return float(probs @ ((1.0 - 2.0 * z + 2.0 * z**2) / np.sqrt(z * (1.0 - z))))


@dataclass
class WassersteinBoundBreakdown:
    """Terms of the carre-du-champ Wasserstein bound.

    total = term1 + term2. The variance variant replaces the first moment of
    |Gamma - 1| by a standard deviation and the mixed difference by a fourth moment.
    """

    term1: float
    term2: float
    variance_term1: float = 0.0
    variance_term2: float = 0.0
    exact_dw: Optional[float] = None

    @property
    def total(self) -> float:
        return self.term1 + self.term2

    @property
    def variance_total(self) -> float:
        return self.variance_term1 + self.variance_term2

    @property
    def margin(self) -> Optional[float]:
        if self.exact_dw is None:
            return None
        return self.total - self.exact_dw

    def to_dict(self) -> Dict[str, Any]:
        return {
            "term1": self.term1,
            "term2": self.term2,
            "total": self.total,
            "variance_term1": self.variance_term1,
            "variance_term2": self.variance_term2,
            "variance_total": self.variance_total,
            "exact_dw": self.exact_dw,
            "margin": self.margin,
        }


def check_standardized(F: Functional, tol: float = TOL_STANDARDIZED) -> None:
    """Raise NotStandardized unless E[F|Z] = 0 and E[F^2] = 1 within tol."""
    worst_mean = float(np.max(np.abs(conditional_expectation_given_Z(F))))
    second = expectation(F * F)
    if worst_mean > tol or abs(second - 1.0) > tol:
        raise NotStandardized(f"max |E[F|Z]| = {worst_mean:.3e}, E[F^2] = {second:.6f}")


def standardize(F: Functional) -> Functional:
    """(F - E[F|Z]) / sqrt(E[(F - E[F|Z])^2])."""
    centered = F - F.model.latent_function(conditional_expectation_given_Z(F))
    second = expectation(centered * centered)
    if second <= TOL_STANDARDIZED**2 * max(1.0, expectation(F * F)):
        raise NotStandardized(f"Functional has zero conditional variance (E[(F - E[F|Z])^2] = {second:.3e})")
    return centered / math.sqrt(second)


def general_w1_bound(F: Functional, with_exact: bool = True) -> WassersteinBoundBreakdown:
    """Carre-du-champ bound on d_W(F, N(0, 1)) for standardized F.

    term1 = sqrt(2/pi) E|Gamma(F, -L^{-1} F) - 1|
    term2 = (1/2) sum_a E[|Delta^a L^{-1} F| (Delta^a F)^2]

    Raises:
        NotStandardized: When E[F|Z] != 0 or E[F^2] != 1 within 1e-8
    """
    check_standardized(F)
    potential = inverse_L(F)
    gamma = carre_du_champ(F, -potential)
    term1 = SQRT_2_OVER_PI * expectation(abs(gamma - 1.0))
    term2 = 0.5 * sum(expectation(mixed_difference_moment(F, potential, a)) for a in F.model.indices)
    variance_term1 = SQRT_2_OVER_PI * math.sqrt(max(variance(gamma), 0.0))
    dirichlet = max(-expectation(F * generator_L(F)), 0.0)
    variance_term2 = (math.sqrt(2.0) / 2.0) * math.sqrt(dirichlet) * math.sqrt(fourth_difference_sum(F))
    breakdown = WassersteinBoundBreakdown(
        term1=term1,
        term2=term2,
        variance_term1=variance_term1,
        variance_term2=variance_term2,
        exact_dw=exact_w1(F) if with_exact else None,
    )
    logger.debug("W1 bound: %s", breakdown.to_dict())
    return breakdown


def multi_chaos_bound(decomposition: ChaosDecomposition, max_order: Optional[int] = None) -> float:
    """Multi-chaos Wasserstein bound.

    The p and q sums run over the non-zero chaos orders only; vanishing orders add nothing.

    sqrt(2/pi) sum_{p,q} (1/q) sqrt(Var Gamma(F_p, F_q))
      + sqrt(2) sum_p (1/p) sqrt(E F_p^2) {sum_p p^{1/4} (sum_a E|Delta^a F|^4)^{1/4}}^2

    Raises:
        NotPureChaos: When chaos components above max_order do not vanish
    """
    components = decomposition.components
    top = len(components) - 1 if max_order is None else max_order
    for n in range(top + 1, len(components)):
        if components[n].max_abs() > TOL_PIPELINE:
            raise NotPureChaos(f"Chaos component {n} is non-zero above order {top}")
    F = decomposition.source - components[0]
    orders = [p for p in range(1, top + 1) if components[p].max_abs() > TOL_PIPELINE]
    if not orders:
        return 0.0
    first = 0.0
    for p in orders:
        for q in orders:
            gamma = carre_du_champ(components[p], components[q])
            first += math.sqrt(max(variance(gamma), 0.0)) / q
    fourth = fourth_difference_sum(F) ** 0.25
    amplitude = sum(math.sqrt(max(expectation(components[p] ** 2), 0.0)) / p for p in orders)
    spread = sum(p**0.25 * fourth for p in orders) ** 2
    return SQRT_2_OVER_PI * first + math.sqrt(2.0) * amplitude * spread


def chain_rule_one(psi: Callable, psi_prime: Callable, F: Functional, G: Functional) -> Tuple[Functional, Functional]:
    """First pseudo chain rule: remainder R = Gamma(psi(F), G) - (psi'(F)/2) sum_a E[Delta F Delta G | X, Z].

    Returns:
        (|R|, bound) where bound = sum_a E[|Delta^a G| (Delta^a F)^2 | X, Z] / 4, to be
        multiplied by the sup norm of psi''
    """
    transformed = F.apply(psi)
    leading = F.apply(psi_prime) * carre_du_champ_difference(F, G)
    remainder = carre_du_champ(transformed, G) - leading
    bound = F.model.constant(0.0)
    for a in F.model.indices:
        bound = bound + mixed_difference_moment(F, G, a)
    return abs(remainder), 0.25 * bound


def chain_rule_two(
    phi: Tuple[Callable, Callable, Callable],
    psi: Tuple[Callable, Callable, Callable],
    F: Functional,
) -> Functional:
    """Second pseudo chain rule remainder.

    Gamma(phi(F), psi(F)) - (phi' psi')(F) Gamma(F, F)
      + (1/4)(phi'' psi' + phi' psi'')(F) sum_a E[(Delta^a F)^3 | X, Z]

    Each argument is a (function, first derivative, second derivative) triple. The
    remainder is of fourth order in the differences of F.
    """
    f, f1, f2 = phi
    g, g1, g2 = psi
    cubic = F.model.constant(0.0)
    for a in F.model.indices:
        cubic = cubic + difference_moment(F, a, 3)
    first = F.apply(lambda x: f1(x) * g1(x)) * carre_du_champ(F, F)
    second = F.apply(lambda x: f2(x) * g1(x) + f1(x) * g2(x)) * cubic
    return carre_du_champ(F.apply(f), F.apply(g)) - first + 0.25 * second


@dataclass
class BernoulliRow:
    n: int
    empirical_dw: float
    bound: float
    seed: Optional[int]
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "empirical_dw": self.empirical_dw,
            "bound": self.bound,
            "seed": self.seed,
            "samples": self.samples,
        }


@dataclass
class BernoulliExperiment:
    rows: List[BernoulliRow] = field(default_factory=list)
    slope: Optional[float] = None

    @property
    def dominated(self) -> bool:
        return all(row.empirical_dw <= row.bound for row in self.rows)


def sample_bernoulli_statistic(
    n: int,
    samples: int,
    latent_values: Sequence[float],
    rng: np.random.Generator,
    latent_probs: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Draws of (S_n - nZ) / sqrt(nZ(1 - Z)) with S_n | Z ~ Binomial(n, Z)."""
    z_values = np.asarray(latent_values, dtype=float)
    probs = None if latent_probs is None else np.asarray(latent_probs, dtype=float)
    z = rng.choice(z_values, size=samples, p=probs)
    successes = rng.binomial(n, z)
    return (successes - n * z) / np.sqrt(n * z * (1.0 - z))


def _draw_share(
    n: int,
    latent_values: Sequence[float],
    shares: Sequence[int],
    streams: Sequence[np.random.Generator],
    worker: int,
) -> np.ndarray:
    return sample_bernoulli_statistic(n, shares[worker], latent_values, streams[worker])


def bernoulli_experiment(
    ns: Sequence[int],
    samples: int,
    latent_values: Sequence[float] = (0.3, 0.5, 0.7),
    seed: Optional[int] = None,
    workers: int = 1,
) -> BernoulliExperiment:
    """Conditional Bernoulli CLT: empirical d_W of the normalized sum against the Lyapunov bound.

    Samples for each n are split across workers with streams derived from (seed, worker);
    each n uses its own seed offset so rows do not share draws.
    """
    experiment = BernoulliExperiment()
    for i, n in enumerate(ns):
        row_seed = None if seed is None else seed + i
        streams = spawn_streams(row_seed, workers)
        shares = split_counts(samples, workers)
        draws = parallel_map(
            partial(_draw_share, n, latent_values, shares, streams),
            list(range(workers)),
            workers,
        )
        empirical = w1_to_std_normal(EmpiricalDistribution(np.concatenate(draws)))
        bound = lyapunov_bound(conditional_bernoulli(n, latent_values))
        row = BernoulliRow(n=int(n), empirical_dw=empirical, bound=bound, seed=row_seed, samples=samples)
        logger.info("Bernoulli CLT n=%d: d_W=%.5f bound=%.5f", n, empirical, bound)
        experiment.rows.append(row)
    if len(experiment.rows) >= 2:
        log_n = np.log([row.n for row in experiment.rows])
        log_dw = np.log([row.empirical_dw for row in experiment.rows])
        experiment.slope = float(np.polyfit(log_n, log_dw, 1)[0])
    return experiment
