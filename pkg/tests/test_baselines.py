import numpy as np
import pytest

from helpers import random_instance
from satfolio.baselines.features import (
    GLOBAL_FEATURE_NAMES,
    Standardizer,
    global_feature_matrix,
    global_features,
)
from satfolio.baselines.objects import get_selector, get_selector_names
from satfolio.baselines.selectors.knn import knn_select
from satfolio.baselines.selectors.ridge import ridge_fit, ridge_select
from satfolio.core.cnf import CnfInstance, PermutationKind, PermutationSpec, permute


def _feature(values: np.ndarray, name: str) -> float:
    return values[GLOBAL_FEATURE_NAMES.index(name)]


def test_global_features_of_t1(t1):
    f = global_features(t1)
    assert f.shape == (len(GLOBAL_FEATURE_NAMES),)
    expected = {
        "n_vars": 3,
        "n_clauses": 3,
        "clause_var_ratio": 1.0,
        "horn_fraction": 2 / 3,
        "binary_fraction": 1 / 3,
        "ternary_fraction": 1 / 3,
        "clause_length_mean": 2.0,
        "clause_length_min": 1.0,
        "clause_length_max": 3.0,
        "clause_length_std": np.sqrt(2 / 3),
        "var_occurrence_mean": 2.0,
        "clause_positive_fraction_mean": 7 / 18,
        "var_polarity_ratio_mean": 11 / 18,
    }
    for name, value in expected.items():
        assert _feature(f, name) == pytest.approx(value, abs=1e-12), name


def test_unit_clause_instance():
    f = global_features(CnfInstance(num_vars=1, clauses=[[1]]))
    assert _feature(f, "clause_length_std") == 0.0
    assert _feature(f, "horn_fraction") == 1.0
    assert _feature(f, "var_polarity_ratio_mean") == 1.0


def test_instance_without_clauses():
    f = global_features(CnfInstance(num_vars=4, clauses=[]))
    assert _feature(f, "n_vars") == 4
    assert np.all(np.isfinite(f))


@pytest.mark.parametrize("kind", list(PermutationKind))
def test_global_features_ignore_permutations(kind):
    rng = np.random.default_rng(2)
    for seed in range(50):
        inst = random_instance(rng)
        shuffled = permute(inst, PermutationSpec(kind, seed))
        np.testing.assert_allclose(
            global_features(shuffled), global_features(inst), rtol=1e-12, atol=1e-12
        )


def test_feature_matrix_of_nothing():
    assert global_feature_matrix([]).shape == (0, len(GLOBAL_FEATURE_NAMES))


def test_standardizer():
    X = np.array([[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]])
    scaler = Standardizer().fit(X)
    Z = scaler.transform(X)
    np.testing.assert_allclose(Z[:, 0].mean(), 0.0, atol=1e-12)
    np.testing.assert_allclose(Z[:, 0].std(), 1.0)
    # constant columns pass through
    np.testing.assert_array_equal(Z[:, 1], X[:, 1])

    with pytest.raises(ValueError):
        Standardizer().transform(X)


def test_ridge_recovers_linear_runtimes():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    W = np.array([[1.0, -2.0], [0.5, 0.0], [3.0, 1.0]])
    Y = X @ W + np.array([10.0, 12.0])

    model = ridge_fit(X, Y, alpha=1e-10)
    np.testing.assert_allclose(model.predict(X), Y, atol=1e-6)
    np.testing.assert_array_equal(ridge_select(model, X), np.argmin(model.predict(X), axis=1))


def test_ridge_constant_runtimes():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 4))
    Y = np.tile([7.0, 3.0], (20, 1))
    model = ridge_fit(X, Y)
    np.testing.assert_allclose(model.coef, 0.0, atol=1e-10)
    np.testing.assert_allclose(model.intercept, [7.0, 3.0])


def test_ridge_duplicated_training_set():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(15, 4))
    Y = rng.uniform(1, 100, size=(15, 3))
    a = ridge_fit(X, Y, alpha=0.5)
    b = ridge_fit(np.vstack([X, X]), np.vstack([Y, Y]), alpha=0.5)
    np.testing.assert_allclose(a.coef, b.coef, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(a.intercept, b.intercept, rtol=1e-9)


def test_ridge_rejects_bad_alpha():
    with pytest.raises(ValueError):
        ridge_fit(np.ones((3, 2)), np.ones((3, 2)), alpha=0)


def test_knn_label_pure_neighbourhood():
    train = np.arange(12, dtype=np.float64).reshape(-1, 1)
    labels = np.array([2] * 9 + [0] * 3)
    assert knn_select(np.array([0.0]), train, labels, k=9, n_solvers=3) == 2


def test_knn_with_fewer_points_than_k():
    train = np.array([[0.0], [1.0], [2.0]])
    assert knn_select(np.array([5.0]), train, np.array([1, 1, 0]), k=9) == 1


def test_knn_vote_tie_goes_to_lowest_solver():
    train = np.array([[0.0], [0.0]])
    assert knn_select(np.array([0.0]), train, np.array([1, 0]), k=2) == 0


def test_knn_needs_training_points():
    with pytest.raises(ValueError):
        knn_select(np.array([0.0]), np.zeros((0, 1)), np.array([], dtype=int))


def test_knn_separates_clusters():
    rng = np.random.default_rng(4)
    centers = np.array([[0.0, 0.0], [10.0, 10.0]])
    labels = rng.integers(0, 2, size=200)
    X = centers[labels] + rng.normal(size=(200, 2))
    runtimes = np.where(labels[:, None] == np.arange(2), 1.0, 5.0)

    selector = get_selector("knn").fit(X[:150], runtimes[:150])
    accuracy = np.mean(selector.select(X[150:]) == labels[150:])
    assert accuracy >= 0.95


def test_best_base_selector():
    runtimes = np.array([[1.0, 2.0], [9.0, 2.0], [1.0, 3.0]])
    selector = get_selector("best_base").fit(np.zeros((3, 1)), runtimes)
    np.testing.assert_array_equal(selector.select(np.zeros((4, 1))), [1, 1, 1, 1])


def test_selector_registry(t1):
    assert get_selector_names() == ["best_base", "knn", "ridge"]
    with pytest.raises(ValueError):
        get_selector("nope")

    with pytest.raises(ValueError):
        get_selector("ridge").select(np.zeros((1, 2)))

    X = global_feature_matrix([t1, t1])
    selector = get_selector("ridge", alpha=0.1).fit(X, np.array([[1.0, 2.0], [1.0, 2.0]]))
    np.testing.assert_array_equal(selector.select_instances([t1]), [0])
