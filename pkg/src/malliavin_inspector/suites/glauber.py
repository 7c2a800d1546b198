import logging
import math
from typing import Any, Dict

import numpy as np

from malliavin_inspector.config import ExperimentConfig
from malliavin_inspector.constants import SE_GATE
from malliavin_inspector.glauber import SemigroupEstimate, decay_slope, estimate_Pt, simulate_path
from malliavin_inspector.models import Functional, ProductModel, cm1, conditional_expectation_given_Z
from malliavin_inspector.operators import gradient, semigroup_Pt, semigroup_Pt_frozen, single_particle_remark
from malliavin_inspector.utils import make_rng

from .base import BaseSuite

logger = logging.getLogger(__name__)

ERGODIC_TIME = 20.0
DECAY_TOLERANCE = 0.15


def glauber_functional(model: ProductModel) -> Functional:
    """X_1 + X_2 X_3 on the first three coordinates, or the plain sum on smaller models."""
    coordinates = [model.coordinate(a) for a in model.indices]
    if len(coordinates) >= 3:
        return coordinates[0] + coordinates[1] * coordinates[2]
    total = model.constant(0.0)
    for coordinate in coordinates:
        total = total + coordinate
    return total


def _compare(label: str, estimate: SemigroupEstimate, reference: np.ndarray) -> Dict[str, Any]:
    within = estimate.within(reference, SE_GATE)
    scaled = np.abs(estimate.estimate - reference) / np.maximum(estimate.stderr, 1e-300)
    scaled[np.abs(estimate.estimate - reference) <= 1e-12] = 0.0
    return {
        "check": label,
        "t": estimate.t,
        "cells": int(within.size),
        "within": int(np.count_nonzero(within)),
        "max_standard_errors": float(np.max(scaled)),
    }


def dump_paths(model: ProductModel, horizon: float, seed: int, path: str) -> int:
    """Write one simulated path per start cell as JSON lines; returns the number written."""
    rng = make_rng(seed)
    written = 0
    with open(path, "w", encoding="utf-8") as f:
        for cell in np.ndindex(*model.shape):
            simulated = simulate_path(model, (cell[0], cell[1:]), horizon, rng)
            f.write(simulated.to_json_line() + "\n")
            written += 1
    logger.info("Wrote %d Glauber paths to %s", written, path)
    return written


class GlauberSuite(BaseSuite):
    """Monte Carlo semigroup against Mehler's formula."""

    command = "glauber"

    @classmethod
    def run(cls, config: ExperimentConfig) -> dict:
        model = cls.load_model_or(config, cm1)
        F = glauber_functional(model)
        rows = []
        for i, t in enumerate(config.times):
            estimate = estimate_Pt(model, F, t, config.paths, seed=config.seed + i, workers=config.workers)
            rows.append(_compare("mehler", estimate, semigroup_Pt(F, t).table))

        offset = config.seed + len(config.times)
        limit = np.broadcast_to(
            conditional_expectation_given_Z(F).reshape((-1,) + (1,) * model.n_components), model.shape
        )
        ergodic = estimate_Pt(model, F, ERGODIC_TIME, config.paths, seed=offset, workers=config.workers)
        rows.append(_compare("ergodic", ergodic, limit))

        t0 = config.times[0] if config.times else 1.0
        thinned = estimate_Pt(model, F, t0, config.paths, seed=offset + 1, workers=config.workers, thinning=True)
        rows.append(_compare("thinning", thinned, semigroup_Pt(F, t0).table))

        a = model.indices[0]
        grad = gradient(F, a)
        frozen = estimate_Pt(model, grad, t0, config.paths, seed=offset + 2, workers=config.workers, frozen=a)
        rows.append(_compare("frozen", frozen, semigroup_Pt_frozen(grad, t0, a).table))

        checks = {
            label: all(row["within"] == row["cells"] for row in rows if row["check"] == label)
            for label in ("mehler", "ergodic", "thinning", "frozen")
        }
        details: Dict[str, Any] = {"functional": "X1 + X2 X3", "paths": config.paths, "gate": SE_GATE}
        if len(config.times) >= 2:
            slope = decay_slope(
                model,
                model.centered_coordinate(a),
                config.times,
                config.paths,
                seed=offset + 3,
                workers=config.workers,
            )
            details["decay_slope"] = slope
            checks["decay"] = math.isfinite(slope) and abs(slope + 1.0) <= DECAY_TOLERANCE
        if model.n_components == 1:
            details["single_particle_residual"] = single_particle_remark(F, t0)
        if config.dump_paths:
            details["dumped_paths"] = dump_paths(model, max(config.times, default=t0), config.seed, config.dump_paths)

        value = ", ".join(f"{row['check']}@t={row['t']:g}: {row['within']}/{row['cells']}" for row in rows)
        if "decay_slope" in details:
            value += f", decay slope={details['decay_slope']:.3f}"
        return cls.result(checks, value, details=details, rows=rows)
