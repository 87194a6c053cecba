from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field
from tqdm import tqdm

from satfolio.core.cache import get_graph
from satfolio.core.cnf import CnfInstance
from satfolio.core.graph import FeatureMode, LiteralClauseGraph, build_graph
from satfolio.neuralnet.checkpoint import check_schema
from satfolio.neuralnet.model import SolverDistribution, Tape, backward, forward
from satfolio.neuralnet.params import ModelParameters, init_params
from satfolio.training.dataset import EmptyFold, LabeledDataset, MissingRuntimes
from satfolio.training.loss import regret_loss, regret_loss_with_grad
from satfolio.training.optim import AdamState, EarlyStopping, adam_step
from satfolio.util.csv import write_csv


class TrainConfig(BaseModel):
    learning_rate: float = Field(default=1e-3, gt=0)
    max_epochs: int = Field(default=100, ge=0)
    batch_size: int = Field(default=32, ge=1)
    patience: int = Field(default=10, ge=1)
    val_fraction: float = Field(default=0.2, gt=0, lt=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    feature_mode: FeatureMode = FeatureMode.CUSTOM_PE
    homogeneous: bool = False
    hidden: int = Field(default=64, ge=1)
    n_layers: int = Field(default=2, ge=0)
    log_runtime: bool = False  # train on log1p(seconds) instead of raw seconds


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainResult:
    params: ModelParameters
    log: list[EpochLog]
    best_epoch: int | None = None
    best_val_loss: float | None = None
    initial_train_loss: float | None = None
    fold: int | None = None


def _split_validation(
    pool: np.ndarray, val_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    pool = pool[rng.permutation(len(pool))]
    if len(pool) < 2:
        return pool, pool
    n_val = min(len(pool) - 1, max(1, round(val_fraction * len(pool))))
    return pool[n_val:], pool[:n_val]


def _mean_loss(
    graphs: list[LiteralClauseGraph], targets: np.ndarray, params: ModelParameters
) -> float:
    losses = [regret_loss(forward(g, params), t) for g, t in zip(graphs, targets)]
    return float(np.mean(losses))


def train(
    dataset: LabeledDataset,
    fold: int,
    config: TrainConfig | None = None,
    verbose: bool = False,
) -> TrainResult:
    """Trains a selector on every fold but `fold`, holding out `val_fraction` of
    the training instances for early stopping. The parameters with the lowest
    validation loss are returned."""
    config = config or TrainConfig()
    pool = dataset.train_indices(fold)
    if len(pool) == 0:
        raise EmptyFold(f"No training instances outside fold {fold}")
    for i in pool:
        if dataset.records[i].n_solvers != dataset.n_solvers:
            raise MissingRuntimes(f"`{dataset.records[i].instance_id}` lacks runtimes")

    rng = np.random.default_rng(config.seed)
    train_idx, val_idx = _split_validation(pool, config.val_fraction, rng)

    params = init_params(
        n_solvers=dataset.n_solvers,
        hidden=config.hidden,
        n_layers=config.n_layers,
        seed=config.seed,
        homogeneous=config.homogeneous,
        feature_mode=config.feature_mode,
    )
    if config.max_epochs == 0:
        return TrainResult(params=params, log=[], fold=fold)

    logger.info(
        f"Fold {fold}: {len(train_idx)} training and {len(val_idx)} validation instances"
    )
    runtimes = dataset.runtimes
    targets = np.log1p(runtimes) if config.log_runtime else runtimes
    graphs = {
        i: get_graph(dataset.paths[i], config.feature_mode, config.seed)
        for i in tqdm(pool, desc="Building graphs", disable=not verbose)
    }
    train_graphs = [graphs[i] for i in train_idx]
    val_graphs = [graphs[i] for i in val_idx]

    initial_train_loss = _mean_loss(train_graphs, targets[train_idx], params)
    best_params = params.copy()
    best_val_loss = np.inf
    best_epoch = None
    stopper = EarlyStopping(patience=config.patience)
    state = AdamState()
    log = []

    for epoch in tqdm(range(config.max_epochs), desc=f"Fold {fold}", disable=not verbose):
        order = train_idx[rng.permutation(len(train_idx))]
        epoch_losses = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            grads = {name: np.zeros(t.shape) for name, t in params.tensors.items()}
            for i in batch:
                tape = Tape()
                dist = forward(graphs[i], params, tape)
                loss, grad_probs = regret_loss_with_grad(dist, targets[i])
                epoch_losses.append(loss)
                for name, g in backward(graphs[i], params, grad_probs, tape).items():
                    grads[name] += g
            grads = {name: g / len(batch) for name, g in grads.items()}
            tensors, state = adam_step(params.tensors, grads, state, config.learning_rate)
            params = params.with_tensors(tensors)

        train_loss = float(np.mean(epoch_losses))
        val_loss = _mean_loss(val_graphs, targets[val_idx], params)
        log.append(EpochLog(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        logger.debug(f"Epoch {epoch}: train loss {train_loss:.6g}, val loss {val_loss:.6g}")

        if val_loss < best_val_loss:
            best_val_loss = val_loss
            best_epoch = epoch
            best_params = params.copy()
        stopper(val_loss)
        if stopper.early_stop:
            logger.info(f"Fold {fold}: stopped after epoch {epoch}")
            break

    logger.info(f"Fold {fold}: best validation loss {best_val_loss:.6g} at epoch {best_epoch}")
    return TrainResult(
        params=best_params,
        log=log,
        best_epoch=best_epoch,
        best_val_loss=float(best_val_loss),
        initial_train_loss=initial_train_loss,
        fold=fold,
    )


def train_cross_validation(
    dataset: LabeledDataset, config: TrainConfig | None = None, verbose: bool = False
) -> list[TrainResult]:
    return [
        train(dataset, fold, config, verbose=verbose)
        for fold in range(dataset.config.n_folds)
    ]


def write_training_log(log: Iterable[EpochLog], path: Path | str):
    rows = [
        {"epoch": e.epoch, "train_loss": repr(e.train_loss), "val_loss": repr(e.val_loss)}
        for e in log
    ]
    write_csv(rows, path, ["epoch", "train_loss", "val_loss"])


def predict_distribution(
    inst: CnfInstance, params: ModelParameters, seed: int | None = None
) -> SolverDistribution:
    """`seed` defaults to the feature seed the model was trained with"""
    check_schema(params)
    seed = params.feature_seed if seed is None else seed
    return forward(build_graph(inst, mode=params.feature_mode, seed=seed), params)


def select_solver(inst: CnfInstance, params: ModelParameters, seed: int | None = None) -> int:
    """Most probable solver for an instance, lowest index on ties"""
    return predict_distribution(inst, params, seed).best


def select_solvers(
    instances: Iterable[CnfInstance], params: ModelParameters, seed: int | None = None
) -> list[int]:
    return [select_solver(inst, params, seed) for inst in instances]


def select_fold(
    dataset: LabeledDataset, fold: int, params: ModelParameters, seed: int | None = None
) -> dict[str, int]:
    """Selections for the test instances of `fold`, keyed by instance id"""
    check_schema(params)
    seed = params.feature_seed if seed is None else seed
    return {
        dataset.records[i].instance_id: forward(
            get_graph(dataset.paths[i], params.feature_mode, seed), params
        ).best
        for i in dataset.test_indices(fold)
    }
