import math

import numpy as np
import pytest

from malliavin_inspector.constants import TOL_OPERATOR, TOL_PIPELINE, TOL_QUADRATURE
from malliavin_inspector.exceptions import IndexOutOfRange, NegativeTime, NotCentered, SizeCapExceeded
from malliavin_inspector.models import (
    center_given_latent,
    conditional_bernoulli,
    conditional_expectation_given_Z,
    expectation,
    random_functional,
    random_model,
    random_process,
)
from malliavin_inspector.operators import (
    carre_du_champ,
    carre_du_champ_difference,
    chaos_decompose,
    chaos_order,
    chaos_projector,
    chaos_projector_composition,
    commutation_residual,
    cond_exp_excluding,
    difference_moment,
    dirichlet_form,
    divergence,
    generator_L,
    gradient,
    gradient_process,
    inverse_L,
    inverse_L_quadrature,
    iterated_gradient,
    iterated_gradient_mobius,
    operator_residuals,
    semigroup_Pt,
    semigroup_Pt_frozen,
    single_particle_remark,
)


def test_gradient_of_coordinate_is_centered_coordinate(cm1_model):
    """D_1 X_1 = X_1 - E[X_1 | Z] and D_2 X_1 = 0."""
    X1 = cm1_model.coordinate(1)
    assert gradient(X1, 1).allclose(cm1_model.centered_coordinate(1), atol=TOL_OPERATOR)
    assert gradient(X1, 2).max_abs() == 0.0


def test_gradient_identities(small_models, rng):
    for model in small_models:
        F = random_functional(model, rng)
        for a in model.indices:
            grad = gradient(F, a)
            assert (gradient(grad, a) - grad).max_abs() < TOL_OPERATOR
            assert cond_exp_excluding(grad, a).max_abs() < TOL_OPERATOR
            for b in model.indices:
                assert (gradient(grad, b) - gradient(gradient(F, b), a)).max_abs() < TOL_OPERATOR


def test_integration_by_parts(small_models, rng):
    for model in small_models:
        F = random_functional(model, rng)
        U = random_process(model, rng)
        lhs = expectation(gradient_process(F).inner(U))
        rhs = expectation(F * divergence(U))
        assert abs(lhs - rhs) < TOL_OPERATOR


def test_operator_residuals_report(small_models, rng):
    model = small_models[0]
    residuals = operator_residuals(random_functional(model, rng), random_process(model, rng))
    assert set(residuals) == {"idempotence", "centering", "commutation", "integration_by_parts"}
    assert max(residuals.values()) < TOL_OPERATOR


def test_generator_is_minus_sum_of_gradients(small_models, rng):
    for model in small_models:
        F = random_functional(model, rng)
        total = model.constant(0.0)
        for a in model.indices:
            total = total + gradient(F, a)
        assert (generator_L(F) + total).max_abs() < TOL_OPERATOR


def test_iterated_gradient_matches_mobius(small_models, rng):
    for model in small_models:
        F = random_functional(model, rng)
        indices = model.indices
        residual = (iterated_gradient(F, indices) - iterated_gradient_mobius(F, indices)).max_abs()
        assert residual < TOL_OPERATOR


def test_chaos_decomposition(small_models, rng):
    for model in small_models:
        F = random_functional(model, rng)
        decomposition = chaos_decompose(F)
        assert len(decomposition) == model.n_components + 1
        assert (decomposition.reconstruct() - F).max_abs() < TOL_PIPELINE
        for n, component in enumerate(decomposition.components):
            assert (generator_L(component) + n * component).max_abs() < TOL_PIPELINE
            assert (chaos_projector(component, n) - component).max_abs() < TOL_PIPELINE
            assert (chaos_projector_composition(F, n) - component).max_abs() < TOL_PIPELINE
            for other in decomposition.components[n + 1 :]:
                assert np.max(np.abs(conditional_expectation_given_Z(component * other))) < TOL_PIPELINE


def test_zeroth_chaos_is_conditional_mean(cm1_model):
    X1 = cm1_model.coordinate(1)
    decomposition = chaos_decompose(X1)
    np.testing.assert_allclose(decomposition[0].table.reshape(2, -1)[:, 0], [0.3, 0.7])
    assert decomposition[1].allclose(cm1_model.centered_coordinate(1), atol=TOL_OPERATOR)
    assert chaos_order(cm1_model.centered_coordinate(1)) == 1
    assert chaos_order(X1) is None


def test_second_chaos_term(cm1_model):
    Y1 = cm1_model.centered_coordinate(1)
    Y2 = cm1_model.centered_coordinate(2)
    F = Y1 * Y2
    assert chaos_order(F) == 2
    assert chaos_decompose(F).term((2, 1)).allclose(F, atol=TOL_OPERATOR)
    assert list(chaos_decompose(F).nonzero_terms()) == [(1, 2)]


@pytest.mark.parametrize("n", [-1, 4])
def test_chaos_projector_range(cm1_model, n):
    with pytest.raises(IndexOutOfRange):
        chaos_projector(cm1_model.coordinate(1), n)


def test_chaos_decomposition_component_limit():
    model = conditional_bernoulli(15)
    with pytest.raises(SizeCapExceeded):
        chaos_decompose(model.coordinate(1))


def test_inverse_generator(small_models, rng):
    for model in small_models:
        F = center_given_latent(random_functional(model, rng))
        potential = inverse_L(F)
        assert (generator_L(potential) - F).max_abs() < TOL_PIPELINE
        assert (inverse_L_quadrature(F) - potential).max_abs() < TOL_QUADRATURE


def test_inverse_generator_needs_centering(cm1_model):
    with pytest.raises(NotCentered):
        inverse_L(cm1_model.coordinate(1))


def test_carre_du_champ_forms_agree(functional_pair):
    F, G = functional_pair
    assert (carre_du_champ(F, G) - carre_du_champ_difference(F, G)).max_abs() < TOL_PIPELINE
    assert dirichlet_form(F, F) == pytest.approx(-expectation(F * generator_L(F)), abs=TOL_PIPELINE)


def test_first_difference_moment_is_gradient(functional_pair):
    F, _ = functional_pair
    for a in F.model.indices:
        assert (difference_moment(F, a, 1) - gradient(F, a)).max_abs() < TOL_OPERATOR


def test_semigroup_limits(cm1_model, rng):
    F = random_functional(cm1_model, rng)
    assert semigroup_Pt(F, 0.0).allclose(F, atol=TOL_PIPELINE)
    limit = cm1_model.latent_function(conditional_expectation_given_Z(F))
    assert semigroup_Pt(F, 50.0).allclose(limit, atol=1e-12)
    with pytest.raises(NegativeTime):
        semigroup_Pt(F, -0.1)
    with pytest.raises(NegativeTime):
        semigroup_Pt_frozen(F, -0.1, 1)


def test_semigroup_on_first_chaos(cm1_model):
    Y1 = cm1_model.centered_coordinate(1)
    assert semigroup_Pt(Y1, 1.0).allclose(math.exp(-1.0) * Y1, atol=TOL_OPERATOR)


@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.5])
def test_commutation_relation(small_models, rng, t):
    for model in small_models:
        F = random_functional(model, rng)
        for a in model.indices:
            assert commutation_residual(F, a, t) < TOL_PIPELINE


def test_single_particle_remark(rng):
    model = random_model(rng, max_components=1)
    F = random_functional(model, rng)
    assert single_particle_remark(F, 0.7) < TOL_PIPELINE
    with pytest.raises(ValueError):
        single_particle_remark(conditional_bernoulli(2).coordinate(1), 0.7)
