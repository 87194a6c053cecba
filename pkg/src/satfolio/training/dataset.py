"""Labeled datasets: per-solver runtimes of a collection of instances.

On disk a dataset is a manifest CSV with header `instance_id,path,t_1,...,t_K`
and a sidecar flat config `<manifest>.cfg` holding the cutoff, the solver names
and the fold seed. Runs that hit the cutoff or crashed are listed in an optional
`<manifest>.status.csv` (`instance_id,solver,status`).
"""

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, field_validator

from satfolio.util.config import dump_config, load_config
from satfolio.util.csv import read_csv, write_csv

DEFAULT_CUTOFF = 500.0
DEFAULT_N_FOLDS = 5


class DatasetError(ValueError):
    pass


class EmptyFold(DatasetError):
    pass


class MissingRuntimes(DatasetError):
    pass


@dataclass(frozen=True)
class RuntimeRecord:
    instance_id: str
    runtimes: np.ndarray  # seconds, censored runs stored at the cutoff

    def __post_init__(self):
        runtimes = np.asarray(self.runtimes, dtype=np.float64)
        if runtimes.ndim != 1 or len(runtimes) == 0 or not np.all(np.isfinite(runtimes)):
            raise MissingRuntimes(f"Incomplete runtimes for `{self.instance_id}`")
        if np.any(runtimes <= 0):
            raise DatasetError(f"Non-positive runtime for `{self.instance_id}`")
        runtimes.flags.writeable = False
        object.__setattr__(self, "runtimes", runtimes)

    @property
    def n_solvers(self) -> int:
        return len(self.runtimes)

    @property
    def best_time(self) -> float:
        return float(self.runtimes.min())

    @property
    def best_solver(self) -> int:
        """Fastest solver, lowest index on ties"""
        return int(np.argmin(self.runtimes))


class DatasetConfig(BaseModel):
    cutoff: float = Field(default=DEFAULT_CUTOFF, gt=0)
    solvers: list[str]
    fold_seed: int = Field(default=0, ge=0)
    n_folds: int = Field(default=DEFAULT_N_FOLDS, ge=1)

    @field_validator("solvers", mode="before")
    @classmethod
    def _split_names(cls, value):
        if isinstance(value, str):
            return [v.strip() for v in value.split(",") if v.strip()]
        return [str(v) for v in value]


def assign_folds(best_solvers: np.ndarray, n_folds: int, seed: int) -> np.ndarray:
    """Seeded fold assignment stratified by best solver: instances of each label
    are shuffled, then dealt round-robin, continuing from the previous label"""
    best_solvers = np.asarray(best_solvers)
    rng = np.random.default_rng(seed)
    folds = np.empty(len(best_solvers), dtype=np.int64)
    position = 0
    for label in np.unique(best_solvers):
        idx = np.flatnonzero(best_solvers == label)
        idx = idx[rng.permutation(len(idx))]
        folds[idx] = (position + np.arange(len(idx))) % n_folds
        position += len(idx)
    return folds


@dataclass(eq=False)
class LabeledDataset:
    records: list[RuntimeRecord]
    paths: list[Path]
    config: DatasetConfig
    folds: np.ndarray | None = None
    statuses: dict[tuple[str, int], str] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.paths) != len(self.records):
            raise DatasetError(
                f"{len(self.records)} records but {len(self.paths)} instance paths"
            )
        self.paths = [Path(p) for p in self.paths]
        n_solvers = len(self.config.solvers)
        for record in self.records:
            if record.n_solvers != n_solvers:
                raise MissingRuntimes(
                    f"`{record.instance_id}` has {record.n_solvers} runtimes, "
                    f"expected {n_solvers}"
                )
        if self.folds is None:
            self.folds = assign_folds(
                self.best_solvers, self.config.n_folds, self.config.fold_seed
            )
        self.folds = np.asarray(self.folds, dtype=np.int64)
        if len(self.folds) != len(self.records):
            raise DatasetError("Fold assignment does not cover every record")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def n_solvers(self) -> int:
        return len(self.config.solvers)

    @property
    def cutoff(self) -> float:
        return self.config.cutoff

    @property
    def runtimes(self) -> np.ndarray:
        """[n_instances x n_solvers] runtime table"""
        if not self.records:
            return np.zeros((0, self.n_solvers))
        return np.stack([r.runtimes for r in self.records])

    @property
    def best_solvers(self) -> np.ndarray:
        return np.array([r.best_solver for r in self.records], dtype=np.int64)

    def _check_fold(self, fold: int):
        if not 0 <= fold < self.config.n_folds:
            raise ValueError(f"Fold {fold} is outside [0, {self.config.n_folds})")

    def test_indices(self, fold: int) -> np.ndarray:
        self._check_fold(fold)
        return np.flatnonzero(self.folds == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        self._check_fold(fold)
        return np.flatnonzero(self.folds != fold)


def _sidecar(manifest_path: Path, suffix: str) -> Path:
    return manifest_path.with_name(manifest_path.stem + suffix)


def write_manifest(dataset: LabeledDataset, path: Path | str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base_dir = path.parent.resolve()

    field_names = ["instance_id", "path"] + [f"t_{k + 1}" for k in range(dataset.n_solvers)]
    rows = []
    for record, instance_path in zip(dataset.records, dataset.paths):
        row = {
            "instance_id": record.instance_id,
            "path": os.path.relpath(instance_path.resolve(), base_dir),
        }
        row.update({f"t_{k + 1}": repr(float(t)) for k, t in enumerate(record.runtimes)})
        rows.append(row)
    write_csv(rows, path, field_names)

    dump_config(
        dataset.config.model_dump(), _sidecar(path, ".cfg"), header="satfolio dataset"
    )

    if dataset.statuses:
        status_rows = [
            {"instance_id": i, "solver": dataset.config.solvers[k], "status": s}
            for (i, k), s in dataset.statuses.items()
        ]
        write_csv(status_rows, _sidecar(path, ".status.csv"), ["instance_id", "solver", "status"])
    logger.info(f"Wrote manifest of {len(dataset)} instances to `{path}`")


def read_manifest(path: Path | str) -> LabeledDataset:
    path = Path(path)
    header, rows = read_csv(path)
    if header[:2] != ["instance_id", "path"] or len(header) < 3:
        raise DatasetError(f"Invalid manifest header: {header}")
    n_solvers = len(header) - 2
    if header[2:] != [f"t_{k + 1}" for k in range(n_solvers)]:
        raise DatasetError(f"Invalid runtime columns: {header[2:]}")

    config_path = _sidecar(path, ".cfg")
    if config_path.exists():
        config = DatasetConfig(**load_config(config_path))
    else:
        logger.warning(f"No dataset config found at `{config_path}`, using defaults")
        config = DatasetConfig(solvers=[f"solver_{k + 1}" for k in range(n_solvers)])
    if len(config.solvers) != n_solvers:
        raise DatasetError(
            f"Config names {len(config.solvers)} solvers, manifest has {n_solvers}"
        )

    records = []
    paths = []
    for row in rows:
        try:
            runtimes = [float(row[f"t_{k + 1}"]) for k in range(n_solvers)]
        except (TypeError, ValueError):
            raise MissingRuntimes(f"Missing runtime for `{row['instance_id']}`") from None
        records.append(RuntimeRecord(instance_id=row["instance_id"], runtimes=runtimes))
        paths.append(path.parent / row["path"])

    statuses = {}
    status_path = _sidecar(path, ".status.csv")
    if status_path.exists():
        _, status_rows = read_csv(status_path)
        for row in status_rows:
            statuses[(row["instance_id"], config.solvers.index(row["solver"]))] = row["status"]

    return LabeledDataset(records=records, paths=paths, config=config, statuses=statuses)
