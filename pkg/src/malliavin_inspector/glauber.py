"""Monte Carlo simulation of the modified Glauber dynamics.

Clock rings arrive at rate |A| + 1. At each ring an index is chosen uniformly in
A plus a cemetery index; a real index has its coordinate redrawn from its conditional
law given Z, the cemetery index changes nothing. Z never moves along a path.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from malliavin_inspector.exceptions import MalliavinError, NegativeTime
from malliavin_inspector.models import Functional, ProductModel
from malliavin_inspector.models.functional import conditional_expectation_given_Z
from malliavin_inspector.models.sampling import evaluate
from malliavin_inspector.utils import parallel_map, spawn_streams, split_counts

logger = logging.getLogger(__name__)

CEMETERY = None


@dataclass(frozen=True)
class GlauberEvent:
    """One clock ring: time, chosen index (None for the cemetery) and the resampled value index."""

    time: float
    index: Optional[Hashable]
    value: Optional[int]


@dataclass
class GlauberPath:
    """A simulated path on [0, horizon]."""

    latent: int
    initial: Tuple[int, ...]
    horizon: float
    events: List[GlauberEvent] = field(default_factory=list)

    def state_at(self, t: float, model: ProductModel) -> Tuple[int, ...]:
        """Configuration (value indices) at time t."""
        state = list(self.initial)
        for event in self.events:
            if event.time > t:
                break
            if event.index is not CEMETERY:
                state[model.position(event.index)] = int(event.value)
        return tuple(state)

    def endpoint(self, model: ProductModel) -> Tuple[int, ...]:
        return self.state_at(self.horizon, model)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "latent": self.latent,
            "initial": list(self.initial),
            "horizon": self.horizon,
            "events": [[event.time, event.index, event.value] for event in self.events],
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), default=str)


def _check_start(model: ProductModel, start: Tuple[int, Sequence[int]]) -> Tuple[int, Tuple[int, ...]]:
    latent, config = start
    config = tuple(int(i) for i in config)
    if not 0 <= int(latent) < model.n_latent:
        raise MalliavinError(f"Latent index {latent} outside 0..{model.n_latent - 1}")
    if len(config) != model.n_components:
        raise MalliavinError(f"Start configuration has {len(config)} entries, model has {model.n_components}")
    for position, (i, component) in enumerate(zip(config, model.components)):
        if not 0 <= i < component.size:
            raise MalliavinError(f"Start value index {i} invalid for component {position}")
    return int(latent), config


def simulate_path(
    model: ProductModel,
    start: Tuple[int, Sequence[int]],
    T: float,
    rng: np.random.Generator,
) -> GlauberPath:
    """Simulate the event list of one path up to horizon T.

    Args:
        model: The product model
        start: (latent index, configuration as value indices)
        T: Horizon, T >= 0
        rng: Random stream

    Returns:
        GlauberPath: with strictly increasing jump times in (0, T]
    """
    if T < 0:
        raise NegativeTime(f"Horizon must be non-negative, got {T}")
    latent, config = _check_start(model, start)
    m = model.n_components
    n_events = int(rng.poisson((m + 1) * T)) if T > 0 else 0
    times = np.sort(rng.uniform(0.0, T, size=n_events))
    choices = rng.integers(0, m + 1, size=n_events)
    events = []
    for time, choice in zip(times, choices):
        if choice == m:
            events.append(GlauberEvent(float(time), CEMETERY, None))
            continue
        component = model.components[choice]
        value = int(rng.choice(component.size, p=component.cond_pmf[latent]))
        events.append(GlauberEvent(float(time), component.index, value))
    return GlauberPath(latent=latent, initial=config, horizon=float(T), events=events)


def _refresh_mask(
    rng: np.random.Generator,
    paths: int,
    m: int,
    t: float,
    thinning: bool,
    frozen: Optional[int],
) -> np.ndarray:
    """Boolean (paths, m): whether each coordinate was refreshed at least once by time t."""
    if thinning:
        hit = rng.random((paths, m)) < -math.expm1(-t)
    else:
        rings = rng.poisson((m + 1) * t, size=paths)
        counts = rng.multinomial(rings, np.full(m + 1, 1.0 / (m + 1)))
        hit = counts[:, :m] > 0
    if frozen is not None:
        hit[:, frozen] = False
    return hit


def sample_endpoints(
    model: ProductModel,
    start: Tuple[int, Sequence[int]],
    t: float,
    paths: int,
    rng: np.random.Generator,
    thinning: bool = False,
    frozen: Optional[Hashable] = None,
) -> np.ndarray:
    """Value indices of X(t) for `paths` independent paths from one start, shape (paths, m).

    Only the last refresh of a coordinate matters, so the endpoint is the start with every
    refreshed coordinate replaced by a fresh conditional draw.

    Args:
        thinning: Refresh each coordinate with probability 1 - e^{-t} instead of simulating rings
        frozen: Index whose coordinate is never refreshed
    """
    if t < 0:
        raise NegativeTime(f"Time must be non-negative, got {t}")
    latent, config = _check_start(model, start)
    m = model.n_components
    frozen_position = None if frozen is None else model.position(frozen)
    state = np.tile(np.asarray(config, dtype=int), (paths, 1))
    if t == 0 or paths == 0:
        return state
    hit = _refresh_mask(rng, paths, m, t, thinning, frozen_position)
    for position, component in enumerate(model.components):
        cdf = np.cumsum(component.cond_pmf[latent])
        fresh = np.minimum(np.searchsorted(cdf, rng.random(paths), side="right"), component.size - 1)
        state[:, position] = np.where(hit[:, position], fresh, state[:, position])
    return state


@dataclass
class SemigroupEstimate:
    """Monte Carlo estimate of P_t F at every start cell.

    Attributes:
        estimate: Array of the model's shape with the mean of F(X(t)) per start
        stderr: Standard errors (sample standard deviation over sqrt(paths))
        paths: Paths per start cell
        seed: Seed the streams were derived from
        workers: Worker count used for the split
    """

    estimate: np.ndarray
    stderr: np.ndarray
    paths: int
    t: float
    seed: Optional[int]
    workers: int

    def within(self, reference: np.ndarray, gate: float) -> np.ndarray:
        """Cells where |estimate - reference| <= gate * stderr (exact agreement when stderr = 0)."""
        diff = np.abs(self.estimate - reference)
        return diff <= gate * self.stderr + 1e-12


def _start_cells(model: ProductModel) -> Iterator[Tuple[int, Tuple[int, ...]]]:
    for cell in np.ndindex(*model.shape):
        yield cell[0], tuple(cell[1:])


def estimate_Pt(
    model: ProductModel,
    F: Functional,
    t: float,
    paths: int,
    seed: Optional[int] = None,
    workers: int = 1,
    thinning: bool = False,
    frozen: Optional[Hashable] = None,
) -> SemigroupEstimate:
    """Estimate P_t F(z, x) = E[F(X(t)) | X(0) = x, Z = z] for every start cell.

    Paths are split across workers; worker w draws from the stream derived from
    (seed, w) and handles the same share of paths for every start cell. Per-worker means and
    centered sums of squares are merged in worker order, so (seed, workers) fixes the result
    bit for bit.
    """
    if t < 0:
        raise NegativeTime(f"Time must be non-negative, got {t}")
    if paths < 1:
        raise MalliavinError("At least one path per start is required")
    if F.model is not model:
        raise MalliavinError("Functional does not belong to the simulated model")
    streams = spawn_streams(seed, workers)
    shares = split_counts(paths, workers)
    cells = list(_start_cells(model))
    logger.debug("Glauber estimate: %d start cells, %d paths each, %d workers", len(cells), paths, workers)

    def run(worker: int) -> Tuple[int, np.ndarray, np.ndarray]:
        rng = streams[worker]
        share = shares[worker]
        means = np.zeros(model.shape)
        centered = np.zeros(model.shape)
        for latent, config in cells:
            if share == 0:
                continue
            ends = sample_endpoints(model, (latent, config), t, share, rng, thinning=thinning, frozen=frozen)
            values = evaluate(F.table, np.full(share, latent), ends)
            cell_mean = values.mean()
            means[(latent,) + config] = cell_mean
            centered[(latent,) + config] = np.square(values - cell_mean).sum()
        return share, means, centered

    partials = parallel_map(run, list(range(workers)), workers)
    count = 0
    mean = np.zeros(model.shape)
    m2 = np.zeros(model.shape)
    # pairwise merge of (count, mean, centered sum of squares), in worker order
    for share, part_mean, part_m2 in partials:
        if share == 0:
            continue
        merged = count + share
        delta = part_mean - mean
        mean = mean + delta * (share / merged)
        m2 = m2 + part_m2 + delta**2 * (count * share / merged)
        count = merged
    var = m2 / (paths - 1) if paths > 1 else np.zeros(model.shape)
    return SemigroupEstimate(
        estimate=mean,
        stderr=np.sqrt(var / paths),
        paths=paths,
        t=float(t),
        seed=seed,
        workers=workers,
    )


def decay_slope(
    model: ProductModel,
    F: Functional,
    times: Sequence[float],
    paths: int,
    seed: Optional[int] = None,
    workers: int = 1,
) -> float:
    """Slope of log max|estimate_Pt - E[F|Z]| against t; close to -p for F in the p-th chaos."""
    limit = conditional_expectation_given_Z(F).reshape((-1,) + (1,) * model.n_components)
    gaps = []
    for i, t in enumerate(times):
        stream_seed = None if seed is None else seed + i
        estimate = estimate_Pt(model, F, t, paths, seed=stream_seed, workers=workers)
        gaps.append(float(np.max(np.abs(estimate.estimate - limit))))
    slope, _ = np.polyfit(np.asarray(times, dtype=float), np.log(gaps), 1)
    return float(slope)
