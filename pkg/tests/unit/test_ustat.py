import math

import numpy as np
import pytest

from malliavin_inspector.constants import HC_BOUND, TOL_OPERATOR, TOL_PIPELINE
from malliavin_inspector.exceptions import (
    ConditionFailed,
    MalliavinError,
    NonProductForm,
    NotHomogeneous,
    NotPureChaos,
    NotStandardized,
)
from malliavin_inspector.models import conditional_bernoulli, expectation, rademacher_like
from malliavin_inspector.operators import chaos_projector
from malliavin_inspector.suites.ustat import (
    degeneracy,
    disjoint_pairs,
    random_chaos_functional,
    standardized_linear,
)
from malliavin_inspector.ustat import (
    DegenerateUStat,
    HomogeneousSum,
    build_homogeneous_sum,
    check_egf,
    check_h1,
    connected_quadruples,
    connected_sum,
    dejong_quantities,
    fourth_moment_report,
    h2_kappa,
    hc_ratio,
    hermite_identity,
    hoeffding_decompose,
    maximal_influence,
    sandwich_check,
)


@pytest.mark.parametrize(
    "degree, coefficients",
    [
        (0, {}),
        (1, {(1, 2): 1.0}),
        (2, {(1, 1): 1.0}),
        (2, {(1, 2): float("nan")}),
    ],
)
def test_homogeneous_sum_validation(degree, coefficients):
    with pytest.raises(MalliavinError):
        HomogeneousSum(degree=degree, coefficients=coefficients)


def test_latent_coefficient(cm1_model):
    W = build_homogeneous_sum(cm1_model, HomogeneousSum(degree=1, coefficients={(1,): [0.3, 0.7]}))
    expected = cm1_model.latent_payload() * cm1_model.coordinate(1)
    assert W.allclose(expected, atol=TOL_OPERATOR)


def test_hoeffding_of_coordinate(cm1_model):
    W = build_homogeneous_sum(cm1_model, HomogeneousSum(degree=1, coefficients={(1,): 1.0}))
    decomposition = hoeffding_decompose(W)
    assert list(decomposition) == [(1,)]
    assert decomposition[(1,)].kernel.allclose(cm1_model.centered_coordinate(1), atol=TOL_OPERATOR)
    assert decomposition.conditional_mean.allclose(cm1_model.latent_payload(), atol=TOL_OPERATOR)


def test_hoeffding_of_product(cm1_model):
    W = build_homogeneous_sum(cm1_model, HomogeneousSum(degree=2, coefficients={(3, 2): 1.0}))
    decomposition = hoeffding_decompose(W)
    Z = cm1_model.latent_payload()
    Y2 = cm1_model.centered_coordinate(2)
    Y3 = cm1_model.centered_coordinate(3)
    assert decomposition.orders() == [1, 2]
    assert decomposition[(2, 3)].kernel.allclose(Y2 * Y3, atol=TOL_OPERATOR)
    assert decomposition[(2,)].kernel.allclose(Z * Y2, atol=TOL_OPERATOR)
    assert (decomposition.reconstruct() - W).max_abs() < TOL_PIPELINE
    for order in (1, 2):
        assert (decomposition.chaos(order) - chaos_projector(W, order)).max_abs() < TOL_PIPELINE


def test_hoeffding_needs_homogeneous_source(cm1_model):
    with pytest.raises(NotHomogeneous):
        hoeffding_decompose(cm1_model.coordinate(1))


def test_degenerate_ustat_product(cm1_model):
    W = DegenerateUStat.product(cm1_model, (2, 1), weight=2.0)
    assert W.support == (1, 2)
    assert W.order == 2
    assert W.degeneracy_residual((1,)) < TOL_OPERATOR
    assert W.degeneracy_residual(()) < TOL_OPERATOR


def test_eigenfunction_condition():
    model = conditional_bernoulli(4)
    Y1 = model.centered_coordinate(1)
    Y2 = model.centered_coordinate(2)
    assert check_egf(Y1 * Y2, 2)
    assert check_egf(Y1, 1)
    with pytest.raises(NotPureChaos):
        check_egf(model.coordinate(1), 1)


def test_connected_quadruples():
    assert list(connected_quadruples([(1, 2)])) == [((1, 2),) * 4]
    disjoint = list(connected_quadruples([(1, 2), (3, 4)]))
    assert sorted(disjoint) == [((1, 2),) * 4, ((3, 4),) * 4]
    chain = set(connected_quadruples([(1, 2), (2, 3), (3, 4)]))
    assert ((1, 2), (2, 3), (3, 4), (2, 3)) in chain
    assert ((1, 2), (1, 2), (3, 4), (3, 4)) not in chain


def test_connected_sum_of_nothing():
    assert connected_sum([]) == 0.0


def test_connected_sum_of_disjoint_pairs():
    model = conditional_bernoulli(8)
    _, components = disjoint_pairs(model)
    diagonal = sum(expectation(component.kernel**4) for component in components)
    assert connected_sum(components) == pytest.approx(diagonal, abs=TOL_PIPELINE)
    assert connected_sum(components, workers=3) == pytest.approx(diagonal, abs=TOL_PIPELINE)


def test_fourth_moment_report_single_sign():
    model = rademacher_like(1)
    F = model.centered_coordinate(1)
    report = fourth_moment_report(F, [DegenerateUStat.product(model, (1,))])
    assert report.fourth_moment - 3.0 == pytest.approx(-2.0)
    assert report.order == 1
    assert report.egf
    assert report.proposition_holds
    assert report.influence_holds
    assert all(math.isfinite(v) for v in (report.var_gamma, report.hc_ratio, report.connected_sum))


def test_fourth_moment_gap_shrinks_with_components():
    narrow = fourth_moment_report(*standardized_linear(rademacher_like(1)))
    wide = fourth_moment_report(*standardized_linear(rademacher_like(6)))
    assert wide.fourth_moment_gap < narrow.fourth_moment_gap


def test_fourth_moment_report_needs_standardized_input(cm1_model):
    with pytest.raises(NotStandardized):
        fourth_moment_report(cm1_model.constant(0.0), [])


@pytest.mark.parametrize("order", [1, 2, 3])
def test_random_chaos_functionals(rng, order):
    model = conditional_bernoulli(5, (0.3, 0.7))
    F, components, residual = random_chaos_functional(model, order, 4, rng)
    assert residual < TOL_PIPELINE
    assert degeneracy(components) < TOL_PIPELINE
    assert expectation(F * F) == pytest.approx(1.0)
    report = fourth_moment_report(F, components)
    assert report.order == order
    assert report.influence_holds
    if report.egf:
        assert report.proposition_holds
    assert hermite_identity(F, order).residual < 1e-9
    square = F * F - 1.0
    assert sandwich_check(square, 2 * order, 2 * order).lower_holds
    assert sandwich_check(square, 2 * order + 1, 2 * order).upper_holds


def test_sandwich_preconditions(cm1_model):
    G = cm1_model.centered_coordinate(1) * cm1_model.centered_coordinate(2)
    with pytest.raises(MalliavinError):
        sandwich_check(G, 1.0, 2)
    with pytest.raises(NotPureChaos):
        sandwich_check(G, 1.0, 1)
    assert sandwich_check(G, 2.0, 2).upper_holds is None


def test_hermite_identity_needs_eigenfunction(cm1_model):
    with pytest.raises(NotPureChaos):
        hermite_identity(cm1_model.coordinate(1), 1)


def test_h1_constant(cm1_model):
    """W_I = Y1 Y2, W_J = Y2 Y3 and a = 2 give C = E[Y2^2 | Z] = 0.21."""
    components = [DegenerateUStat.product(cm1_model, (1, 2)), DegenerateUStat.product(cm1_model, (2, 3))]
    bounded, constant = check_h1(components, 2)
    assert bounded
    assert constant == pytest.approx(0.21)
    assert check_h1(components, 1) == (True, pytest.approx(0.21))


def test_h1_without_shared_index():
    model = conditional_bernoulli(4)
    components = [DegenerateUStat.product(model, (1, 2)), DegenerateUStat.product(model, (3, 4))]
    assert check_h1(components, 4) == (True, pytest.approx(0.21))
    lone = [DegenerateUStat.product(model, (1, 2))]
    assert check_h1(lone, 3) == (True, 0.0)


def test_h1_needs_reduced_kernels(cm1_model):
    kernel = cm1_model.centered_coordinate(1) * cm1_model.centered_coordinate(2)
    with pytest.raises(NonProductForm):
        check_h1({(1, 2): kernel}, 2)


def test_influence_and_ratios():
    model = conditional_bernoulli(6, (0.3, 0.7))
    _, components = standardized_linear(model)
    assert maximal_influence(components) == pytest.approx(1.0 / 6.0)
    assert math.isfinite(hc_ratio(components))
    assert math.isfinite(h2_kappa(components))
    assert maximal_influence([]) == 0.0


def test_dejong_quantities_trend():
    gaps = []
    for n in (4, 6, 8):
        F, components = standardized_linear(conditional_bernoulli(n, (0.3, 0.7)))
        quantities = dejong_quantities(F, components, strict=True)
        assert all(quantities.conditions.values())
        assert quantities.dejong_i_explicit is not None
        assert quantities.rho == pytest.approx(math.sqrt(1.0 / n))
        gaps.append(quantities.fourth_moment_gap)
    assert gaps == sorted(gaps, reverse=True)
    assert len(set(gaps)) == 3


def test_dejong_disjoint_pairs():
    model = conditional_bernoulli(8, (0.3, 0.7))
    F, components = disjoint_pairs(model)
    quantities = dejong_quantities(F, components, strict=True)
    assert quantities.dejong_ii_radicand == pytest.approx(quantities.connected_sum)
    assert quantities.symbolic["dejong_ii"] == "C_m"
    assert np.isfinite(quantities.fourth_moment_gap)


def _rare_events():
    """First chaos of nearly degenerate Bernoulli coordinates: E[Y^4] / E[Y^2]^2 is about 6664."""
    return standardized_linear(conditional_bernoulli(4, (1e-4, 2e-4)))


def _latent_split_terms():
    """Y_1 lives on Z = 0.3 and Y_2 on Z = 0.7, so E[W_1^2 W_2^2] vanishes."""
    model = conditional_bernoulli(2, (0.3, 0.7))
    scale = 1.0 / math.sqrt(0.21)
    first = model.latent_function([scale, 0.0]) * model.centered_coordinate(1)
    second = model.latent_function([0.0, scale]) * model.centered_coordinate(2)
    return first + second, {(1,): first, (2,): second}


def _mislabelled_order():
    """A second-chaos kernel listed under a first-order support is not an eigenfunction for -1."""
    model = conditional_bernoulli(2, (0.3, 0.7))
    kernel = model.centered_coordinate(1) * model.centered_coordinate(2)
    F = kernel / math.sqrt(expectation(kernel * kernel))
    return F, {(1,): F}


@pytest.mark.parametrize(
    "build, failing",
    [
        (_rare_events, "HC"),
        (_latent_split_terms, "H2"),
        (_mislabelled_order, "EGF"),
    ],
)
def test_dejong_condition_failures(build, failing):
    F, components = build()
    with pytest.raises(ConditionFailed) as excinfo:
        dejong_quantities(F, components, strict=True)
    assert excinfo.value.condition == failing

    quantities = dejong_quantities(F, components, strict=False)
    expected = {name: name != failing for name in ("EGF", "HC", "H1", "H2")}
    assert quantities.conditions == expected, f"Expected only {failing} to fail"
    assert quantities.to_dict()["conditions"] == expected
    if failing in ("EGF", "HC"):
        assert quantities.dejong_i_explicit is None
    else:
        assert quantities.dejong_i_explicit is not None


def test_hc_ratio_is_compared_with_the_bound():
    F, components = _rare_events()
    quantities = dejong_quantities(F, components, strict=False)
    assert quantities.hc_ratio > HC_BOUND
    assert quantities.hc_bound == HC_BOUND
    assert quantities.to_dict()["hc_ratio"] == pytest.approx(quantities.hc_ratio)
    relaxed = dejong_quantities(F, components, strict=True, hc_bound=1e5)
    assert relaxed.conditions["HC"]
    assert relaxed.dejong_i_explicit is not None
    with pytest.raises(MalliavinError):
        dejong_quantities(F, components, hc_bound=0.0)


def test_h2_kappa_is_recorded():
    F, components = _latent_split_terms()
    assert dejong_quantities(F, components, strict=False).h2_kappa == math.inf
    F, components = standardized_linear(conditional_bernoulli(4, (0.3, 0.7)))
    assert math.isfinite(dejong_quantities(F, components).h2_kappa)
