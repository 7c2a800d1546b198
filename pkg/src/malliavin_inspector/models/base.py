import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from malliavin_inspector.constants import DEFAULT_SIZE_CAP, TOL_JOINT, TOL_PROB
from malliavin_inspector.exceptions import DescriptorError, SizeCapExceeded, UnknownIndex

logger = logging.getLogger(__name__)


def _check_pmf(matrix: np.ndarray, path: str) -> None:
    if not np.all(np.isfinite(matrix)):
        raise DescriptorError(path, "probabilities must be finite")
    if np.any(matrix < 0):
        raise DescriptorError(path, "probabilities must be non-negative")
    sums = matrix.sum(axis=-1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > TOL_PROB)
    if bad.size:
        row = int(bad[0])
        where = f"{path}[{row}]" if matrix.ndim > 1 else path
        raise DescriptorError(where, f"probabilities sum to {float(np.atleast_1d(sums)[row])!r}, expected 1")


@dataclass(frozen=True, eq=False)
class LatentSpace:
    """Finite law of the latent variable Z.

    Attributes:
        probs: P(Z = z), one entry per latent state
        labels: Distinct identifiers of the latent states
        payloads: Optional numeric payload per state (a Bernoulli parameter, an edge count, ...)
    """

    probs: np.ndarray
    labels: Tuple[Hashable, ...] = ()
    payloads: Optional[np.ndarray] = None

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if probs.size == 0:
            raise DescriptorError("latent.probs", "latent space must have at least one state")
        _check_pmf(probs, "latent.probs")
        labels = tuple(self.labels) if self.labels else tuple(range(probs.size))
        if len(labels) != probs.size:
            raise DescriptorError("latent.labels", f"expected {probs.size} labels, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise DescriptorError("latent.labels", "labels must be distinct")
        payloads = None
        if self.payloads is not None:
            payloads = np.array(self.payloads, dtype=float).reshape(-1)
            if payloads.size != probs.size:
                raise DescriptorError("latent.payloads", f"expected {probs.size} payloads, got {payloads.size}")
            payloads.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "payloads", payloads)

    @property
    def size(self) -> int:
        return int(self.probs.size)

    @classmethod
    def deterministic(cls, payload: Optional[float] = None) -> "LatentSpace":
        payloads = None if payload is None else [payload]
        return cls(probs=np.ones(1), payloads=payloads)


@dataclass(frozen=True, eq=False)
class ComponentSpace:
    """Finite conditional law of one coordinate X_a given Z.

    Attributes:
        index: Identifier a of the coordinate
        values: Distinct real outcomes of X_a
        cond_pmf: Matrix |latent| x |values|; row z is P(X_a = . | Z = z)
    """

    index: Hashable
    values: np.ndarray
    cond_pmf: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size == 0:
            raise DescriptorError("values", "value list must not be empty")
        if not np.all(np.isfinite(values)):
            raise DescriptorError("values", "values must be finite")
        if np.unique(values).size != values.size:
            raise DescriptorError("values", "values must be distinct")
        cond_pmf = np.atleast_2d(np.array(self.cond_pmf, dtype=float))
        if cond_pmf.shape[1] != values.size:
            raise DescriptorError("cond_pmf", f"rows must have {values.size} entries, got {cond_pmf.shape[1]}")
        _check_pmf(cond_pmf, "cond_pmf")
        values.setflags(write=False)
        cond_pmf.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "cond_pmf", cond_pmf)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def conditional_mean(self) -> np.ndarray:
        """E[X_a | Z = z] for every latent state."""
        return self.cond_pmf @ self.values

    def conditional_central_moment(self, order: int, absolute: bool = False) -> np.ndarray:
        """E[(X_a - E[X_a|Z])^k | Z = z], optionally with absolute value."""
        centered = self.values[None, :] - self.conditional_mean()[:, None]
        if absolute:
            centered = np.abs(centered)
        return (self.cond_pmf * centered**order).sum(axis=1)


@dataclass(frozen=True, eq=False)
class ProductModel:
    """Conditionally independent coordinates X_a, a in A, given a finite latent Z.

    Tables over the model have shape (|latent|, |values_0|, ..., |values_{m-1}|).
    Flattened configuration indices are mixed radix with component 0 varying fastest.
    """

    latent: LatentSpace
    components: Tuple[ComponentSpace, ...]
    size_cap: int = DEFAULT_SIZE_CAP
    name: str = ""
    _positions: Dict[Hashable, int] = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise DescriptorError("components", "model needs at least one component")
        positions: Dict[Hashable, int] = {}
        for position, component in enumerate(components):
            if component.cond_pmf.shape[0] != self.latent.size:
                raise DescriptorError(
                    f"components[{position}].cond_pmf",
                    f"expected {self.latent.size} rows (one per latent state), got {component.cond_pmf.shape[0]}",
                )
            if component.index in positions:
                raise DescriptorError(f"components[{position}].index", f"duplicate index {component.index!r}")
            positions[component.index] = position
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "_positions", positions)

    @property
    def indices(self) -> Tuple[Hashable, ...]:
        return tuple(component.index for component in self.components)

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def n_latent(self) -> int:
        return self.latent.size

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.latent.size,) + tuple(component.size for component in self.components)

    @property
    def total_configurations(self) -> int:
        return int(np.prod([component.size for component in self.components], dtype=object))

    @property
    def n_cells(self) -> int:
        return self.latent.size * self.total_configurations

    def check_size(self) -> None:
        """Raise SizeCapExceeded when dense tables would exceed the cap."""
        if self.n_cells > self.size_cap:
            raise SizeCapExceeded(self.n_cells, self.size_cap)

    def position(self, index: Hashable) -> int:
        """Axis position (0-based, latent axis excluded) of index a."""
        try:
            return self._positions[index]
        except (KeyError, TypeError) as e:
            raise UnknownIndex(index) from e

    def component(self, index: Hashable) -> ComponentSpace:
        return self.components[self.position(index)]

    def axis_shape(self, position: int, size: int) -> Tuple[int, ...]:
        """Broadcast shape for an array living on the latent axis and one coordinate axis."""
        shape = [self.latent.size] + [1] * self.n_components
        shape[position + 1] = size
        return tuple(shape)

    def weights(self, position: int) -> np.ndarray:
        """cond_pmf of the coordinate at position, reshaped to broadcast against tables."""
        component = self.components[position]
        return component.cond_pmf.reshape(self.axis_shape(position, component.size))

    def values_grid(self, position: int) -> np.ndarray:
        component = self.components[position]
        shape = [1] * (self.n_components + 1)
        shape[position + 1] = component.size
        return component.values.reshape(shape)

    @cached_property
    def conditional_joint(self) -> np.ndarray:
        """P(X = x | Z = z) as a dense table."""
        self.check_size()
        joint = np.ones(self.shape)
        for position in range(self.n_components):
            joint = joint * self.weights(position)
        total = joint.reshape(self.latent.size, -1).sum(axis=1)
        if np.any(np.abs(total - 1.0) > TOL_JOINT):
            raise DescriptorError("components", "conditional joint law does not sum to one")
        joint.setflags(write=False)
        logger.debug("Built conditional joint law with %d cells", joint.size)
        return joint

    @cached_property
    def joint(self) -> np.ndarray:
        """P(Z = z, X = x) as a dense table."""
        joint = self.conditional_joint * self.latent.probs.reshape((-1,) + (1,) * self.n_components)
        joint.setflags(write=False)
        return joint

    def conditional_means(self) -> np.ndarray:
        """Matrix |latent| x m of E[X_a | Z = z]."""
        return np.stack([component.conditional_mean() for component in self.components], axis=1)

    def constant(self, value: float = 0.0):
        from .functional import Functional  # pylint: disable=import-outside-toplevel

        return Functional(self, np.full((1,) * (self.n_components + 1), float(value)))

    def coordinate(self, index: Hashable):
        """The functional X_a."""
        from .functional import Functional  # pylint: disable=import-outside-toplevel

        return Functional(self, self.values_grid(self.position(index)))

    def coordinates(self) -> Dict[Hashable, Any]:
        return {index: self.coordinate(index) for index in self.indices}

    def centered_coordinate(self, index: Hashable):
        """The functional Y_a = X_a - E[X_a | Z]."""
        from .functional import Functional  # pylint: disable=import-outside-toplevel

        position = self.position(index)
        means = self.components[position].conditional_mean().reshape(self.axis_shape(position, 1))
        return Functional(self, self.values_grid(position) - means)

    def latent_payload(self):
        """The sigma(Z)-measurable functional z -> payload(z) (the state index when no payloads)."""
        from .functional import Functional  # pylint: disable=import-outside-toplevel

        payloads = self.latent.payloads
        if payloads is None:
            payloads = np.arange(self.latent.size, dtype=float)
        return Functional(self, payloads.reshape((-1,) + (1,) * self.n_components))

    def latent_function(self, values: Sequence[float]):
        """The sigma(Z)-measurable functional taking values[z] on latent state z."""
        from .functional import Functional  # pylint: disable=import-outside-toplevel

        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size != self.latent.size:
            raise ValueError(f"Expected {self.latent.size} latent values, got {values.size}")
        return Functional(self, values.reshape((-1,) + (1,) * self.n_components))

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "latent_states": self.latent.size,
            "components": self.n_components,
            "values": [component.size for component in self.components],
            "cells": self.n_cells,
        }

