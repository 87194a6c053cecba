"""Command-line entry point.

Exit codes: 0 on success, 1 on usage or configuration errors, 2 on data errors
(unreadable files, malformed instances or manifests).

cf. src/satfolio/services/harness/README.md
"""

import json
import sys
from pathlib import Path

import click
import numpy as np
import typer
from loguru import logger
from pydantic import BaseModel, ValidationError
from rich.console import Console

from satfolio.baselines.evaluation import (
    evaluate as _evaluate,
    format_report,
    oracle_selections,
    read_selections,
    write_report,
    write_selections,
)
from satfolio.baselines.features import global_feature_matrix
from satfolio.baselines.objects import get_selector, get_selector_names
from satfolio.core.cnf import load_dimacs
from satfolio.core.graph import FeatureMode, build_graph, export_graph
from satfolio.neuralnet.checkpoint import load_checkpoint, save_checkpoint
from satfolio.services.harness.generator import SyntheticSpec, generate as _generate
from satfolio.services.harness.labeling import ExternalSolvers, label as _label
from satfolio.services.harness.oracle import ORACLE_PRESETS
from satfolio.services.harness.permute_study import (
    external_measure,
    oracle_measure,
    permute_study as _permute_study,
    write_study,
)
from satfolio.training.dataset import LabeledDataset, read_manifest, write_manifest
from satfolio.training.trainer import (
    TrainConfig,
    predict_distribution,
    select_fold,
    train as _train,
    train_cross_validation,
    write_training_log,
)
from satfolio.util.config import load_config, merge_overrides, subsection
from satfolio.util.logging import configure_logging

cli = typer.Typer(add_completion=False)
console = Console()


class ConfigError(Exception):
    """Invalid configuration values, reported with the schema of `model`"""

    def __init__(self, model: type[BaseModel], error: ValidationError):
        super().__init__(str(error))
        self.model = model
        self.error = error


def _build(model: type[BaseModel], config_path: Path | None, section: str, **flags):
    """Config-file values of `section`, overridden by the flags that were set"""
    values = merge_overrides(subsection(load_config(config_path), section), **flags)
    try:
        return model(**values)
    except ValidationError as e:
        raise ConfigError(model, e) from None


def _list_instances(instances_dir: Path) -> list[Path]:
    paths = sorted(instances_dir.glob("*.cnf"))
    if not paths:
        raise ValueError(f"No .cnf files in `{instances_dir}`")
    return paths


def _labeling_mode(oracle: str | None, commands: list[str] | None, names, jobs, seed):
    if commands:
        return ExternalSolvers(commands=commands, names=names or None, jobs=jobs)
    preset = oracle or "default"
    if preset not in ORACLE_PRESETS:
        raise click.UsageError(
            f"Unknown oracle `{preset}`, available: {', '.join(ORACLE_PRESETS)}"
        )
    return ORACLE_PRESETS[preset](seed=seed)


@cli.callback()
def main_options(
    log_level: str = typer.Option(None, help="Log level, defaults to SATFOLIO_LOG_LEVEL or INFO"),
):
    configure_logging(log_level)


@cli.command()
def generate(
    out_dir: Path = typer.Option(..., help="Directory receiving the DIMACS files"),
    config: Path = typer.Option(None, help="Flat config file, keys under `generate.`"),
    n_instances: int = typer.Option(None),
    seed: int = typer.Option(None),
    verbose: bool = True,
):
    spec = _build(SyntheticSpec, config, "generate", n_instances=n_instances, seed=seed)
    _generate(spec, out_dir, verbose=verbose)


@cli.command()
def label(
    instances_dir: Path = typer.Option(...),
    manifest: Path = typer.Option(..., help="Output manifest CSV"),
    cutoff: float = typer.Option(500.0, help="Seconds"),
    oracle: str = typer.Option(None, help=f"Oracle preset: {', '.join(ORACLE_PRESETS)}"),
    command: list[str] = typer.Option(None, help="External solver template with {instance}"),
    name: list[str] = typer.Option(None, help="External solver names"),
    jobs: int = typer.Option(1, help="Parallel solver processes"),
    max_vars: int = typer.Option(None, help="Skip larger instances"),
    n_folds: int = typer.Option(5),
    seed: int = typer.Option(0),
    verbose: bool = True,
):
    try:
        mode = _labeling_mode(oracle, command, name, jobs, seed)
    except ValidationError as e:
        raise ConfigError(ExternalSolvers, e) from None
    dataset = _label(
        _list_instances(instances_dir),
        mode,
        cutoff=cutoff,
        max_vars=max_vars,
        fold_seed=seed,
        n_folds=n_folds,
        verbose=verbose,
    )
    write_manifest(dataset, manifest)


@cli.command()
def featurize(
    instance: Path = typer.Option(...),
    out: Path = typer.Option(..., help="Output graph file"),
    feature_mode: FeatureMode = typer.Option(FeatureMode.CUSTOM_PE),
    seed: int = typer.Option(0),
):
    graph = build_graph(load_dimacs(instance), mode=feature_mode, seed=seed)
    export_graph(graph, out)
    logger.info(
        f"Wrote graph with {graph.n_nodes} nodes and "
        f"{graph.n_lit_clause_edges + graph.n_pos_neg_edges} edges to `{out}`"
    )


def _train_config(config: Path | None, **flags) -> TrainConfig:
    return _build(TrainConfig, config, "train", **flags)


@cli.command()
def train(
    manifest: Path = typer.Option(...),
    out: Path = typer.Option(..., help="Output checkpoint"),
    fold: int = typer.Option(0, help="Held-out test fold"),
    config: Path = typer.Option(None, help="Flat config file, keys under `train.`"),
    log: Path = typer.Option(None, help="Training log CSV"),
    learning_rate: float = typer.Option(None),
    max_epochs: int = typer.Option(None),
    batch_size: int = typer.Option(None),
    patience: int = typer.Option(None),
    feature_mode: FeatureMode = typer.Option(None),
    homogeneous: bool = typer.Option(None),
    seed: int = typer.Option(None),
    verbose: bool = True,
):
    train_config = _train_config(
        config,
        learning_rate=learning_rate,
        max_epochs=max_epochs,
        batch_size=batch_size,
        patience=patience,
        feature_mode=feature_mode,
        homogeneous=homogeneous,
        seed=seed,
    )
    result = _train(read_manifest(manifest), fold, train_config, verbose=verbose)
    save_checkpoint(result.params, out)
    if log is not None:
        write_training_log(result.log, log)
    logger.info(f"Saved checkpoint to `{out}`")


def _solver_names(manifest: Path | None, n_solvers: int) -> list[str]:
    if manifest is not None:
        return read_manifest(manifest).config.solvers
    return [f"solver_{k + 1}" for k in range(n_solvers)]


@cli.command()
def select(
    model: Path = typer.Option(..., help="Checkpoint"),
    instance: Path = typer.Option(None, help="Instance to select a solver for"),
    manifest: Path = typer.Option(None, help="Dataset for solver names or fold selection"),
    fold: int = typer.Option(None, help="Select for the test instances of this fold"),
    out: Path = typer.Option(None, help="Selections CSV (fold mode)"),
    seed: int = typer.Option(None, help="Random feature seed, defaults to the training seed"),
):
    params = load_checkpoint(model)
    if instance is not None:
        dist = predict_distribution(load_dimacs(instance), params, seed)
        names = _solver_names(manifest, params.n_solvers)
        print(f"{names[dist.best]} {dist.best}")
        return

    if manifest is None or fold is None or out is None:
        raise click.UsageError("Pass --instance, or --manifest with --fold and --out")
    dataset = read_manifest(manifest)
    selections = select_fold(dataset, fold, params, seed)
    test_records = [dataset.records[i] for i in dataset.test_indices(fold)]
    write_selections(selections, test_records, out)


@cli.command()
def evaluate(
    selections: Path = typer.Option(...),
    manifest: Path = typer.Option(...),
    cutoff: float = typer.Option(None, help="Seconds, defaults to the dataset cutoff"),
    out: Path = typer.Option(None, help="Report CSV"),
):
    dataset = read_manifest(manifest)
    chosen = read_selections(selections)
    records = [r for r in dataset.records if r.instance_id in chosen]
    report = _evaluate(chosen, records, cutoff or dataset.cutoff, dataset.statuses)
    if out is not None:
        write_report(report, out)
    console.print(format_report({selections.stem: report}))


def _baseline_selections(
    dataset: LabeledDataset, fold: int, names: list[str]
) -> dict[str, dict[str, int]]:
    train_idx, test_idx = dataset.train_indices(fold), dataset.test_indices(fold)
    features = global_feature_matrix([load_dimacs(p) for p in dataset.paths])
    runtimes = dataset.runtimes

    res = {}
    for name in names:
        selector = get_selector(name).fit(features[train_idx], runtimes[train_idx])
        chosen = selector.select(features[test_idx])
        res[name] = {
            dataset.records[i].instance_id: int(k) for i, k in zip(test_idx, chosen)
        }
    return res


@cli.command()
def baseline(
    manifest: Path = typer.Option(...),
    fold: int = typer.Option(0),
    name: list[str] = typer.Option(None, help="Baselines to run, all by default"),
    out_dir: Path = typer.Option(None, help="Selections and reports per baseline"),
):
    dataset = read_manifest(manifest)
    names = name or get_selector_names()
    test_records = [dataset.records[i] for i in dataset.test_indices(fold)]

    reports = {}
    for baseline_name, selections in _baseline_selections(dataset, fold, names).items():
        reports[baseline_name] = _evaluate(
            selections, test_records, dataset.cutoff, dataset.statuses
        )
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            write_selections(selections, test_records, out_dir / f"{baseline_name}.csv")
            write_report(reports[baseline_name], out_dir / f"{baseline_name}_report.csv")
    reports["oracle"] = _evaluate(
        oracle_selections(test_records), test_records, dataset.cutoff, dataset.statuses
    )
    console.print(format_report(reports, title=f"Fold {fold}"))


@cli.command()
def cross_validate(
    manifest: Path = typer.Option(...),
    out_dir: Path = typer.Option(...),
    config: Path = typer.Option(None, help="Flat config file, keys under `train.`"),
    max_epochs: int = typer.Option(None),
    seed: int = typer.Option(None),
    verbose: bool = True,
):
    """Trains one model per fold and compares the pooled test selections with
    the baselines"""
    dataset = read_manifest(manifest)
    train_config = _train_config(config, max_epochs=max_epochs, seed=seed)
    out_dir.mkdir(parents=True, exist_ok=True)

    pooled = {name: {} for name in ["gnn"] + get_selector_names()}
    for result in train_cross_validation(dataset, train_config, verbose=verbose):
        fold = result.fold
        save_checkpoint(result.params, out_dir / f"fold_{fold}.ckpt")
        write_training_log(result.log, out_dir / f"fold_{fold}_log.csv")
        pooled["gnn"].update(select_fold(dataset, fold, result.params))
        for name, selections in _baseline_selections(
            dataset, fold, get_selector_names()
        ).items():
            pooled[name].update(selections)

    reports = {}
    for name, selections in pooled.items():
        reports[name] = _evaluate(selections, dataset.records, dataset.cutoff, dataset.statuses)
        write_selections(selections, dataset.records, out_dir / f"{name}.csv")
        write_report(reports[name], out_dir / f"{name}_report.csv")
    reports["oracle"] = _evaluate(
        oracle_selections(dataset.records), dataset.records, dataset.cutoff, dataset.statuses
    )
    console.print(format_report(reports, title=f"{dataset.config.n_folds}-fold cross-validation"))


@cli.command()
def permute_study(
    instances_dir: Path = typer.Option(...),
    out: Path = typer.Option(..., help="Study CSV"),
    cutoff: float = typer.Option(500.0),
    oracle: str = typer.Option(None, help=f"Oracle preset: {', '.join(ORACLE_PRESETS)}"),
    command: list[str] = typer.Option(None),
    name: list[str] = typer.Option(None),
    jobs: int = typer.Option(1),
    sample: int = typer.Option(30, help="Number of instances"),
    shuffles: int = typer.Option(20, help="Shuffles per kind and instance"),
    solver: int = typer.Option(0),
    seed: int = typer.Option(0),
    verbose: bool = True,
):
    try:
        mode = _labeling_mode(oracle, command, name, jobs, seed)
    except ValidationError as e:
        raise ConfigError(ExternalSolvers, e) from None
    measure = (
        external_measure(mode, cutoff)
        if isinstance(mode, ExternalSolvers)
        else oracle_measure(mode, cutoff)
    )
    instances = [load_dimacs(p) for p in _list_instances(instances_dir)]
    study = _permute_study(
        instances,
        measure,
        n_shuffles=shuffles,
        sample_size=sample,
        solver=solver,
        seed=seed,
        verbose=verbose,
    )
    write_study(study, out)
    logger.info(
        f"Clause shuffles spread runtimes more than relabelings on "
        f"{100 * study.clause_dominates_fraction:.1f}% of {len(study.rows)} instances"
    )
    if study.rows:
        stds = np.array([r.clause_runtimes.std() for r in study.rows])
        logger.info(f"Mean clause-shuffle runtime std: {stds.mean():.3f}s")


def run(argv: list[str] | None = None) -> int:
    """Runs the CLI and maps failures to exit codes"""
    try:
        result = cli(args=argv, standalone_mode=False, prog_name="satfolio")
    except ConfigError as e:
        typer.echo(f"Invalid configuration:\n{e.error}", err=True)
        typer.echo(json.dumps(e.model.model_json_schema(), indent=2), err=True)
        return 1
    except click.exceptions.UsageError as e:
        e.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except (ValueError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 2
    return result if isinstance(result, int) else 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
