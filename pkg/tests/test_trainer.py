import numpy as np
import pytest

from satfolio.baselines.evaluation import evaluate
from satfolio.baselines.features import global_feature_matrix
from satfolio.baselines.objects import get_selector
from satfolio.core.cnf import load_dimacs
from satfolio.core.graph import FeatureMode, build_graph
from satfolio.neuralnet.checkpoint import SchemaMismatch, dumps, loads
from satfolio.neuralnet.model import forward
from satfolio.neuralnet.params import HEAD_BIAS, HEAD_WEIGHT, init_params
from satfolio.services.harness.generator import SyntheticSpec, generate
from satfolio.services.harness.labeling import label
from satfolio.services.harness.oracle import (
    OracleSpec,
    SolverProfile,
    horn_threshold_oracle_spec,
)
from satfolio.training.dataset import DatasetConfig, EmptyFold, LabeledDataset, RuntimeRecord
from satfolio.training.trainer import (
    TrainConfig,
    predict_distribution,
    select_fold,
    select_solver,
    select_solvers,
    train,
    train_cross_validation,
    write_training_log,
)


def _dominance_oracle(seed: int = 0) -> OracleSpec:
    """Solver 0 is always the fastest"""
    return OracleSpec(
        seed=seed,
        solvers=[
            SolverProfile(name="fast", base_cost=1.0, noise_scale=0.1),
            SolverProfile(name="medium", base_cost=5.0, noise_scale=0.1),
            SolverProfile(name="slow", base_cost=9.0, noise_scale=0.1),
        ],
    )


def _labeled_set(tmp_path, n_instances: int, seed: int = 0) -> LabeledDataset:
    spec = SyntheticSpec(n_instances=n_instances, var_range=(5, 12), ratio_range=(2.0, 4.0), seed=seed)
    paths = generate(spec, tmp_path / "instances")
    return label(paths, _dominance_oracle(seed), cutoff=500.0)


SMALL = dict(hidden=8, batch_size=4, max_epochs=3, patience=2)


def test_zero_epochs_returns_initial_params(tmp_path):
    dataset = _labeled_set(tmp_path, 10)
    result = train(dataset, 0, TrainConfig(max_epochs=0, hidden=8, seed=3))
    expected = init_params(3, hidden=8, seed=3)
    assert result.log == []
    assert result.best_epoch is None
    for name in expected.names:
        np.testing.assert_array_equal(result.params[name], expected[name])


def test_training_is_deterministic(tmp_path):
    dataset = _labeled_set(tmp_path, 12)
    a = train(dataset, 1, TrainConfig(seed=5, **SMALL))
    b = train(dataset, 1, TrainConfig(seed=5, **SMALL))
    assert dumps(a.params) == dumps(b.params)
    assert a.log == b.log


def test_best_checkpoint_has_lowest_validation_loss(tmp_path):
    dataset = _labeled_set(tmp_path, 15)
    result = train(dataset, 0, TrainConfig(seed=1, **SMALL))
    assert 1 <= len(result.log) <= 3
    assert all(result.best_val_loss <= e.val_loss for e in result.log)
    assert result.log[result.best_epoch].val_loss == result.best_val_loss


def test_training_log_csv(tmp_path):
    dataset = _labeled_set(tmp_path, 10)
    result = train(dataset, 0, TrainConfig(seed=1, **SMALL))
    path = tmp_path / "log.csv"
    write_training_log(result.log, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,train_loss,val_loss"
    assert len(lines) == len(result.log) + 1


def test_empty_fold():
    config = DatasetConfig(solvers=["a", "b"], n_folds=1)
    dataset = LabeledDataset(
        records=[RuntimeRecord("x", [1.0, 2.0])], paths=["x.cnf"], config=config
    )
    with pytest.raises(EmptyFold):
        train(dataset, 0)


def test_invalid_fold(tmp_path):
    dataset = _labeled_set(tmp_path, 5)
    with pytest.raises(ValueError):
        train(dataset, 7)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(val_fraction=1.0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)


def test_select_solver_tie_goes_to_first(t1):
    params = init_params(3, hidden=4)
    params.tensors[HEAD_WEIGHT][:] = 0
    params.tensors[HEAD_BIAS][:] = 0
    assert select_solver(t1, params) == 0
    assert select_solvers([t1, t1], init_params(3, hidden=4, seed=9)) == [
        select_solver(t1, init_params(3, hidden=4, seed=9))
    ] * 2


def test_select_solver_checks_schema(t1):
    params = init_params(2, hidden=4)
    params.schema_hash ^= 1
    with pytest.raises(SchemaMismatch):
        select_solver(t1, params)


@pytest.mark.slow
def test_learns_dominant_solver(tmp_path):
    dataset = _labeled_set(tmp_path, 200)
    config = TrainConfig(learning_rate=1e-2, max_epochs=60, hidden=16, seed=0)
    result = train(dataset, 0, config)

    selections = select_fold(dataset, 0, result.params)
    assert np.mean([k == 0 for k in selections.values()]) >= 0.95

    train_loss = min(e.train_loss for e in result.log)
    assert train_loss <= 0.1 * result.initial_train_loss

    inst = load_dimacs(dataset.paths[dataset.train_indices(0)[0]])
    assert select_solver(inst, result.params) == 0


def test_cross_validation_trains_every_fold(tmp_path):
    dataset = _labeled_set(tmp_path, 10)
    config = TrainConfig(seed=2, **SMALL)
    results = train_cross_validation(dataset, config)
    assert [r.fold for r in results] == list(range(dataset.config.n_folds))
    assert dumps(results[3].params) == dumps(train(dataset, 3, config).params)


def test_selection_defaults_to_training_feature_seed(tmp_path):
    dataset = _labeled_set(tmp_path, 10)
    config = TrainConfig(seed=4, feature_mode=FeatureMode.RANDOM, **SMALL)
    params = loads(dumps(train(dataset, 0, config).params))
    assert params.feature_seed == 4
    assert select_fold(dataset, 0, params) == select_fold(dataset, 0, params, seed=4)

    inst = load_dimacs(dataset.paths[0])
    expected = forward(build_graph(inst, mode=FeatureMode.RANDOM, seed=4), params)
    np.testing.assert_array_equal(predict_distribution(inst, params).probs, expected.probs)


@pytest.mark.slow
def test_beats_baselines_on_horn_thresholds(tmp_path):
    spec = SyntheticSpec(n_instances=500, pos_prob_range=(0.0, 0.6), seed=0)
    paths = generate(spec, tmp_path / "instances")
    dataset = label(paths, horn_threshold_oracle_spec(), cutoff=500.0)
    features = global_feature_matrix([load_dimacs(p) for p in dataset.paths])

    pooled = {name: {} for name in ["gnn", "best_base", "ridge", "knn"]}
    config = TrainConfig(max_epochs=40, hidden=32, seed=0)
    for result in train_cross_validation(dataset, config):
        train_idx = dataset.train_indices(result.fold)
        test_idx = dataset.test_indices(result.fold)
        pooled["gnn"].update(select_fold(dataset, result.fold, result.params))
        for name in ["best_base", "ridge", "knn"]:
            selector = get_selector(name).fit(features[train_idx], dataset.runtimes[train_idx])
            chosen = selector.select(features[test_idx])
            pooled[name].update(
                {dataset.records[i].instance_id: int(k) for i, k in zip(test_idx, chosen)}
            )

    reports = {
        name: evaluate(selections, dataset.records, dataset.cutoff)
        for name, selections in pooled.items()
    }
    gnn = reports["gnn"]
    assert gnn.accuracy >= 0.8
    assert gnn.avg_runtime <= 0.95 * reports["best_base"].avg_runtime
    assert gnn.avg_runtime <= reports["ridge"].avg_runtime
    assert gnn.avg_runtime <= reports["knn"].avg_runtime
