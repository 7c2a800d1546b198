import math

import numpy as np
import pytest

from malliavin_inspector.concentration import (
    bounded_differences,
    covariance_malliavin,
    covariance_quadrature,
    covariance_residual,
    efron_stein_check,
    mcdiarmid_check,
    spectral_efron_stein,
)
from malliavin_inspector.constants import TOL_PIPELINE, TOL_QUADRATURE
from malliavin_inspector.exceptions import MalliavinError, MismatchedModel
from malliavin_inspector.models import cm1, conditional_variance, random_functional


def test_covariance_of_coordinate(cm1_model):
    X1 = cm1_model.coordinate(1)
    np.testing.assert_allclose(covariance_malliavin(X1, X1), [0.21, 0.21], atol=TOL_PIPELINE)


def test_covariance_identity(functional_pair):
    F, G = functional_pair
    assert covariance_residual(F, G) < TOL_PIPELINE
    np.testing.assert_allclose(covariance_quadrature(F, G), covariance_malliavin(F, G), atol=TOL_QUADRATURE)


def test_covariance_needs_one_model(cm1_model):
    with pytest.raises(MismatchedModel):
        covariance_malliavin(cm1_model.coordinate(1), cm1().coordinate(1))


def test_efron_stein_equality_on_first_chaos(cm1_model):
    report = efron_stein_check(cm1_model.centered_coordinate(1))
    assert report.passed
    assert report.metadata["chaos_order"] == 1
    assert report.metadata["equality_residual"] < TOL_PIPELINE
    for record in report.records:
        assert record.slack == pytest.approx(0.0, abs=TOL_PIPELINE)


def test_efron_stein_slack(cm1_model):
    F = cm1_model.coordinate(1) + cm1_model.coordinate(2) * cm1_model.coordinate(3)
    report = efron_stein_check(F)
    assert report.passed
    assert len(report.records) == 2
    assert report.min_slack > 0
    assert "chaos_order" not in report.metadata


def test_efron_stein_on_random_functionals(small_models, rng):
    for model in small_models:
        F = random_functional(model, rng)
        assert efron_stein_check(F).passed
        np.testing.assert_allclose(spectral_efron_stein(F), conditional_variance(F), atol=TOL_PIPELINE)


def test_mcdiarmid_example(cm1_model):
    """F = X_1 + X_2 + X_3 given Z = 0.3: P(F - 0.9 >= 2) = P(F = 3) = 0.027."""
    S = cm1_model.coordinate(1) + cm1_model.coordinate(2) + cm1_model.coordinate(3)
    np.testing.assert_allclose(bounded_differences(S), [1.0, 1.0, 1.0])
    report = mcdiarmid_check(S, [2.0])
    assert report.metadata["sum_squared"] == pytest.approx(3.0)
    first = report.records[0]
    assert first.latent == 0
    assert first.threshold == 2.0
    assert first.lhs == pytest.approx(0.027)
    assert first.rhs == pytest.approx(math.exp(-4.0 / 6.0))
    assert report.passed


@pytest.mark.parametrize("thresholds", [[], [0.0], [1.0, -1.0]])
def test_mcdiarmid_rejects_thresholds(cm1_model, thresholds):
    with pytest.raises(MalliavinError):
        mcdiarmid_check(cm1_model.coordinate(1), thresholds)


def test_mcdiarmid_on_random_functionals(small_models, rng):
    for model in small_models:
        report = mcdiarmid_check(random_functional(model, rng), [0.5, 1.0, 2.0])
        assert report.passed
        assert len(report.records) == 3 * model.n_latent


def test_report_rendering(cm1_model):
    report = efron_stein_check(cm1_model.coordinate(1))
    lines = report.to_table().splitlines()
    assert len(lines) == 3
    assert "slack" in lines[0]
    assert report.to_dict()["inequality"] == "efron-stein"
