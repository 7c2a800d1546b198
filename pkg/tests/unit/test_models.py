import json

import numpy as np
import pytest

from malliavin_inspector.exceptions import (
    ConfigError,
    DescriptorError,
    MismatchedModel,
    SizeCapExceeded,
    UnknownIndex,
)
from malliavin_inspector.models import (
    ComponentSpace,
    Functional,
    LatentSpace,
    ProductModel,
    SimpleProcess,
    center_given_latent,
    cm1,
    conditional_bernoulli,
    conditional_expectation_given_Z,
    conditional_variance,
    enumerate_configurations,
    expectation,
    load_model,
    model_from_dict,
    model_to_dict,
    rademacher_like,
    sample_configurations,
    variance,
)


def _descriptor():
    return {
        "latent": {"probs": [0.5, 0.5]},
        "components": [
            {"values": [0, 1], "cond_pmf": [[0.7, 0.3], [0.3, 0.7]]},
            {"values": [-1, 0, 2], "cond_pmf": [[0.2, 0.3, 0.5], [0.6, 0.2, 0.2]]},
        ],
    }


def test_cm1_shape_and_joint_law(cm1_model):
    """CM1 has two latent states, three binary coordinates and a joint law summing to one."""
    assert cm1_model.n_latent == 2
    assert cm1_model.n_components == 3
    assert cm1_model.shape == (2, 2, 2, 2)
    assert cm1_model.n_cells == 16
    assert cm1_model.joint.sum() == pytest.approx(1.0)
    assert cm1_model.indices == (1, 2, 3)


def test_enumeration_probabilities_sum_to_one(cm1_model):
    cells = list(enumerate_configurations(cm1_model))
    assert len(cells) == 16
    assert sum(probability for _, _, probability in cells) == pytest.approx(1.0)


def test_coordinate_moments(cm1_model):
    X1 = cm1_model.coordinate(1)
    assert expectation(X1) == pytest.approx(0.5)
    np.testing.assert_allclose(conditional_expectation_given_Z(X1), [0.3, 0.7])
    np.testing.assert_allclose(conditional_variance(X1), [0.21, 0.21])
    assert variance(X1) == pytest.approx(0.25)


def test_law_of_sum(cm1_model):
    S = cm1_model.coordinate(1) + cm1_model.coordinate(2) + cm1_model.coordinate(3)
    atoms, probs = S.law()
    np.testing.assert_allclose(atoms, [0.0, 1.0, 2.0, 3.0])
    assert probs[0] == pytest.approx(0.5 * (0.7**3 + 0.3**3))
    assert probs.sum() == pytest.approx(1.0)


def test_center_given_latent_is_conditionally_centered(small_models, rng):
    for model in small_models:
        F = Functional(model, rng.standard_normal(model.shape))
        centered = center_given_latent(F)
        assert np.max(np.abs(conditional_expectation_given_Z(centered))) < 1e-12


def test_functional_arithmetic_checks_models(cm1_model):
    other = cm1()
    with pytest.raises(MismatchedModel):
        cm1_model.coordinate(1) + other.coordinate(1)


def test_functional_rejects_non_finite(cm1_model):
    with pytest.raises(ValueError):
        Functional(cm1_model, np.full(cm1_model.shape, np.nan))


def test_unknown_index(cm1_model):
    with pytest.raises(UnknownIndex):
        cm1_model.coordinate(7)


def test_size_cap(cm1_model):
    capped = ProductModel(latent=cm1_model.latent, components=cm1_model.components, size_cap=8)
    with pytest.raises(SizeCapExceeded):
        capped.constant(1.0)


def test_simple_process_defaults_to_zero(cm1_model):
    U = SimpleProcess(cm1_model, {2: cm1_model.coordinate(2)})
    assert len(U) == 3
    assert U[1].max_abs() == 0.0
    with pytest.raises(UnknownIndex):
        SimpleProcess(cm1_model, {9: cm1_model.coordinate(1)})


def test_functional_table_layout(cm1_model):
    """Flattened tables list latent states as rows with component 0 varying fastest."""
    X1 = cm1_model.coordinate(1)
    row = X1.to_dict()["table"][:8]
    assert row == [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]
    restored = Functional.from_dict(cm1_model, X1.to_dict())
    assert restored.allclose(X1, atol=0.0)


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d["latent"].update(probs=[0.6, 0.6]), "latent.probs"),
        (lambda d: d["components"][0].update(cond_pmf=[[0.7, 0.3], [0.3, 0.8]]), "components[0].cond_pmf[1]"),
        (lambda d: d["components"][1].update(values=[0, 0, 1]), "components[1].values"),
        (lambda d: d["components"][0].update(cond_pmf=[[0.7, 0.3]]), "components[0].cond_pmf"),
        (lambda d: d["components"][1].update(values=[0, "a", 1]), "components[1].values[1]"),
        (lambda d: d.pop("latent"), "latent"),
    ],
)
def test_descriptor_errors_name_the_first_violation(mutate, path):
    data = _descriptor()
    mutate(data)
    with pytest.raises(DescriptorError) as excinfo:
        model_from_dict(data)
    assert excinfo.value.path == path


def test_descriptor_round_trip(tmp_path):
    model = model_from_dict(_descriptor())
    path = tmp_path / "model.json"
    path.write_text(json.dumps(model_to_dict(model)))
    loaded = load_model(str(path))
    assert loaded.shape == model.shape
    for original, restored in zip(model.components, loaded.components):
        np.testing.assert_array_equal(original.cond_pmf, restored.cond_pmf)


def test_missing_model_file_names_the_path(tmp_path):
    missing = str(tmp_path / "nowhere.json")
    with pytest.raises(ConfigError, match="nowhere.json"):
        load_model(missing)


def test_latent_space_rejects_duplicate_labels():
    with pytest.raises(DescriptorError):
        LatentSpace(probs=[0.5, 0.5], labels=("a", "a"))


def test_component_rejects_wrong_row_count():
    latent = LatentSpace(probs=[0.5, 0.5])
    component = ComponentSpace(index=1, values=[0, 1], cond_pmf=[[0.5, 0.5]])
    with pytest.raises(DescriptorError):
        ProductModel(latent=latent, components=(component,))


def test_presets():
    bernoulli = conditional_bernoulli(4, (0.2, 0.8))
    assert bernoulli.n_components == 4
    np.testing.assert_allclose(bernoulli.latent.payloads, [0.2, 0.8])
    signs = rademacher_like(3)
    assert expectation(signs.coordinate(1)) == pytest.approx(0.0)
    scaled = rademacher_like(2, scales=(1.0, 2.0))
    np.testing.assert_allclose(conditional_variance(scaled.coordinate(1)), [1.0, 4.0])


def test_sampling_follows_the_model(cm1_model, rng):
    latent, configs = sample_configurations(cm1_model, rng, 20000)
    assert configs.shape == (20000, 3)
    assert abs(latent.mean() - 0.5) < 0.03
    # P(X_1 = 1) = 0.5 under CM1
    assert abs(configs[:, 0].mean() - 0.5) < 0.03
