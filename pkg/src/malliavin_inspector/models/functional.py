import logging
from numbers import Real
from typing import Any, Callable, Dict, Hashable, Iterator, Mapping, Optional, Tuple, Union

import numpy as np

from malliavin_inspector.exceptions import MismatchedModel, MalliavinError

from .base import ProductModel

logger = logging.getLogger(__name__)

Operand = Union["Functional", float, int]


class Functional:
    """A real functional F(Z, X) stored as a dense table over (latent state, configuration).

    The table has the model's shape, (|latent|, |values_0|, ..., |values_{m-1}|). Inputs
    that broadcast to that shape are expanded on construction. Instances are immutable
    and hash by identity, so operator caches can key on them.

    Attributes:
        model: The ProductModel the functional lives on
        table: Dense read-only array of values
        source: Optional description the functional was built from (e.g. a HomogeneousSum)
    """

    __array_priority__ = 1000

    def __init__(self, model: ProductModel, table: Any, source: Any = None):
        model.check_size()
        values = np.asarray(table, dtype=float)
        try:
            values = np.array(np.broadcast_to(values, model.shape), dtype=float)
        except ValueError as e:
            raise MalliavinError(f"Table of shape {values.shape} does not fit model shape {model.shape}") from e
        if not np.all(np.isfinite(values)):
            raise MalliavinError("Functional values must be finite")
        values.setflags(write=False)
        self.model = model
        self.table = values
        self.source = source

    def __repr__(self) -> str:
        return f"Functional(shape={self.table.shape}, z_free={self.z_free})"

    @property
    def z_free(self) -> bool:
        """True when the value depends on the configuration only."""
        return bool(np.array_equal(self.table, np.broadcast_to(self.table[:1], self.table.shape)))

    @property
    def flat_table(self) -> np.ndarray:
        """Table of shape (|latent|, total configurations), component 0 varying fastest."""
        return self.table.reshape(self.model.n_latent, -1, order="F")

    def _other_table(self, other: Operand) -> np.ndarray:
        if isinstance(other, Functional):
            if other.model is not self.model:
                raise MismatchedModel("Functionals belong to different models")
            return other.table
        if isinstance(other, (Real, np.floating, np.integer)):
            return np.asarray(float(other))
        return NotImplemented

    def _combine(self, other: Operand, op: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "Functional":
        table = self._other_table(other)
        if table is NotImplemented:
            return NotImplemented
        return Functional(self.model, op(self.table, table))

    def __add__(self, other: Operand) -> "Functional":
        return self._combine(other, np.add)

    def __radd__(self, other: Operand) -> "Functional":
        return self._combine(other, lambda a, b: b + a)

    def __sub__(self, other: Operand) -> "Functional":
        return self._combine(other, np.subtract)

    def __rsub__(self, other: Operand) -> "Functional":
        return self._combine(other, lambda a, b: b - a)

    def __mul__(self, other: Operand) -> "Functional":
        return self._combine(other, np.multiply)

    def __rmul__(self, other: Operand) -> "Functional":
        return self._combine(other, lambda a, b: b * a)

    def __truediv__(self, other: Operand) -> "Functional":
        if isinstance(other, Functional):
            raise TypeError("Division by a functional is not supported; use apply()")
        return self._combine(other, np.divide)

    def __neg__(self) -> "Functional":
        return Functional(self.model, -self.table)

    def __pow__(self, exponent: int) -> "Functional":
        return Functional(self.model, self.table**exponent)

    def __abs__(self) -> "Functional":
        return Functional(self.model, np.abs(self.table))

    def apply(self, fn: Callable[[np.ndarray], np.ndarray]) -> "Functional":
        """Cellwise map F -> fn(F)."""
        return Functional(self.model, fn(self.table))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.table)))

    def allclose(self, other: Operand, atol: float) -> bool:
        table = self._other_table(other)
        return bool(np.max(np.abs(self.table - table)) <= atol)

    def expectation(self) -> float:
        return expectation(self)

    def given_latent(self) -> np.ndarray:
        return conditional_expectation_given_Z(self)

    def law(self, latent: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Exact finite law of F, unconditionally or given Z = latent.

        Returns:
            (atoms, probabilities): atoms sorted ascending, zero-probability atoms removed
        """
        if latent is None:
            weights = self.model.joint
            values = self.table
        else:
            weights = self.model.conditional_joint[latent]
            values = self.table[latent]
        atoms, inverse = np.unique(values.reshape(-1), return_inverse=True)
        probs = np.bincount(inverse.reshape(-1), weights=weights.reshape(-1), minlength=atoms.size)
        keep = probs > 0
        return atoms[keep], probs[keep]

    def to_dict(self) -> Dict[str, Any]:
        return {"z_free": self.z_free, "table": self.flat_table.reshape(-1, order="C").tolist()}

    @classmethod
    def from_dict(cls, model: ProductModel, data: Mapping[str, Any]) -> "Functional":
        """Inverse of to_dict: rows are latent states, each a flattened configuration table."""
        flat = np.asarray(data["table"], dtype=float)
        flat = flat.reshape(model.n_latent, model.total_configurations)
        table = flat.reshape(model.shape, order="F")
        return cls(model, table)

    @classmethod
    def from_function(cls, model: ProductModel, fn: Callable[[int, np.ndarray], float]) -> "Functional":
        """Build F cell by cell from fn(latent index, value vector)."""
        from .sampling import enumerate_configurations  # pylint: disable=import-outside-toplevel

        table = np.empty(model.shape)
        for latent, config, _ in enumerate_configurations(model, with_indices=True):
            values = np.array([component.values[i] for component, i in zip(model.components, config)])
            table[(latent,) + tuple(config)] = fn(latent, values)
        return cls(model, table)


def expectation(F: Functional) -> float:
    """E[F]."""
    return float(np.sum(F.table * F.model.joint))


def conditional_expectation_given_Z(F: Functional) -> np.ndarray:
    """Vector of E[F | Z = z] over latent states."""
    weighted = F.table * F.model.conditional_joint
    return weighted.reshape(F.model.n_latent, -1).sum(axis=1)


def variance(F: Functional) -> float:
    mean = expectation(F)
    return expectation((F - mean) ** 2)


def conditional_variance(F: Functional) -> np.ndarray:
    """Vector of Var[F | Z = z]; clipped at zero against rounding."""
    centered = center_given_latent(F)
    return np.maximum(conditional_expectation_given_Z(centered * centered), 0.0)


def conditional_covariance(F: Functional, G: Functional) -> np.ndarray:
    """Vector of Cov(F, G | Z = z)."""
    if F.model is not G.model:
        raise MismatchedModel("Functionals belong to different models")
    centered_f = F - F.model.latent_function(conditional_expectation_given_Z(F))
    centered_g = G - G.model.latent_function(conditional_expectation_given_Z(G))
    return conditional_expectation_given_Z(centered_f * centered_g)


def center_given_latent(F: Functional) -> Functional:
    """F - E[F | Z]."""
    return F - F.model.latent_function(conditional_expectation_given_Z(F))


class SimpleProcess(Mapping[Hashable, Functional]):
    """A simple process U = sum_a U_a 1_a: one functional per index of the model."""

    def __init__(self, model: ProductModel, entries: Mapping[Hashable, Functional]):
        self.model = model
        self._entries: Dict[Hashable, Functional] = {}
        for index, functional in entries.items():
            model.position(index)
            if functional.model is not model:
                raise MismatchedModel(f"Entry for index {index!r} belongs to another model")
            self._entries[index] = functional

    def __getitem__(self, index: Hashable) -> Functional:
        if index in self._entries:
            return self._entries[index]
        self.model.position(index)
        return self.model.constant(0.0)

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self.model.indices)

    def __len__(self) -> int:
        return self.model.n_components

    def inner(self, other: "SimpleProcess") -> Functional:
        """Pointwise <U, V> = sum_a U_a V_a."""
        if other.model is not self.model:
            raise MismatchedModel("Processes belong to different models")
        total = self.model.constant(0.0)
        for index in self.model.indices:
            total = total + self[index] * other[index]
        return total
