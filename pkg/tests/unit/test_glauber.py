import json

import numpy as np
import pytest

from malliavin_inspector.constants import SE_GATE
from malliavin_inspector.exceptions import MalliavinError, NegativeTime
from malliavin_inspector.glauber import CEMETERY, estimate_Pt, sample_endpoints, simulate_path
from malliavin_inspector.models import cm1, conditional_bernoulli
from malliavin_inspector.operators import semigroup_Pt, semigroup_Pt_frozen
from malliavin_inspector.suites.glauber import dump_paths, glauber_functional


def test_path_events(cm1_model, rng):
    path = simulate_path(cm1_model, (1, (0, 1, 0)), 5.0, rng)
    times = [event.time for event in path.events]
    assert all(0.0 < t <= 5.0 for t in times)
    assert times == sorted(times)
    assert path.latent == 1
    for event in path.events:
        assert event.index is CEMETERY or event.index in cm1_model.indices
    assert len(path.endpoint(cm1_model)) == 3
    assert path.state_at(0.0, cm1_model) == (0, 1, 0)


def test_path_serialization(cm1_model, rng):
    line = simulate_path(cm1_model, (0, (1, 1, 1)), 1.0, rng).to_json_line()
    data = json.loads(line)
    assert data["latent"] == 0
    assert data["initial"] == [1, 1, 1]
    assert data["horizon"] == 1.0


def test_zero_horizon_has_no_events(cm1_model, rng):
    assert simulate_path(cm1_model, (0, (0, 0, 0)), 0.0, rng).events == []


@pytest.mark.parametrize(
    "start",
    [
        (2, (0, 0, 0)),
        (0, (0, 0)),
        (0, (0, 2, 0)),
    ],
)
def test_invalid_start(cm1_model, rng, start):
    with pytest.raises(MalliavinError):
        simulate_path(cm1_model, start, 1.0, rng)


def test_negative_time(cm1_model, rng):
    with pytest.raises(NegativeTime):
        simulate_path(cm1_model, (0, (0, 0, 0)), -1.0, rng)
    with pytest.raises(NegativeTime):
        estimate_Pt(cm1_model, cm1_model.coordinate(1), -0.5, 10)


def test_endpoints_at_time_zero(cm1_model, rng):
    ends = sample_endpoints(cm1_model, (0, (1, 0, 1)), 0.0, 5, rng)
    np.testing.assert_array_equal(ends, np.tile([1, 0, 1], (5, 1)))


def test_frozen_coordinate_never_moves(cm1_model, rng):
    ends = sample_endpoints(cm1_model, (1, (1, 0, 1)), 3.0, 500, rng, frozen=2)
    assert np.all(ends[:, 1] == 0)
    assert np.any(ends[:, 0] == 0)


@pytest.mark.parametrize("thinning", [False, True])
def test_estimate_matches_mehler(cm1_model, thinning):
    F = glauber_functional(cm1_model)
    estimate = estimate_Pt(cm1_model, F, 0.5, 4000, seed=3, thinning=thinning)
    within = estimate.within(semigroup_Pt(F, 0.5).table, SE_GATE)
    assert np.count_nonzero(within) >= within.size - 1


def test_frozen_estimate_matches_frozen_semigroup(cm1_model):
    F = glauber_functional(cm1_model)
    estimate = estimate_Pt(cm1_model, F, 0.8, 4000, seed=5, frozen=1)
    within = estimate.within(semigroup_Pt_frozen(F, 0.8, 1).table, SE_GATE)
    assert np.count_nonzero(within) >= within.size - 1


def test_estimate_is_reproducible(cm1_model):
    F = glauber_functional(cm1_model)
    first = estimate_Pt(cm1_model, F, 1.0, 300, seed=11, workers=3)
    second = estimate_Pt(cm1_model, F, 1.0, 300, seed=11, workers=3)
    np.testing.assert_array_equal(first.estimate, second.estimate)
    assert first.paths == 300
    assert first.workers == 3


@pytest.mark.parametrize("workers", [1, 3, 7])
def test_stderr_is_shift_invariant(cm1_model, workers):
    """A large constant offset moves the estimate but leaves the standard errors intact."""
    F = glauber_functional(cm1_model)
    plain = estimate_Pt(cm1_model, F, 1.0, 300, seed=13, workers=workers)
    shifted = estimate_Pt(cm1_model, F + 1e8, 1.0, 300, seed=13, workers=workers)
    assert np.max(plain.stderr) > 0
    np.testing.assert_allclose(shifted.estimate - 1e8, plain.estimate, atol=1e-6)
    np.testing.assert_allclose(shifted.stderr, plain.stderr, rtol=1e-5, atol=1e-9)
    constant = estimate_Pt(cm1_model, cm1_model.constant(1e8), 1.0, 300, seed=13, workers=workers)
    np.testing.assert_array_equal(constant.stderr, np.zeros(cm1_model.shape))


def test_estimate_rejects_foreign_functional(cm1_model):
    with pytest.raises(MalliavinError):
        estimate_Pt(cm1_model, cm1().coordinate(1), 1.0, 10)


def test_glauber_functional_on_small_model():
    model = conditional_bernoulli(2)
    F = glauber_functional(model)
    assert F.allclose(model.coordinate(1) + model.coordinate(2), atol=0.0)


def test_dump_paths(cm1_model, tmp_path):
    target = tmp_path / "paths.jsonl"
    written = dump_paths(cm1_model, 1.0, 0, str(target))
    lines = target.read_text().splitlines()
    assert written == 16
    assert len(lines) == 16
    assert {json.loads(line)["latent"] for line in lines} == {0, 1}
