import numpy as np

from satfolio.core.cnf import CnfInstance
from satfolio.training.dataset import DatasetConfig, LabeledDataset, RuntimeRecord

T1_TEXT = "p cnf 3 3\n1 -2 0\n-1 2 3 0\n-1 0"


def random_instance(
    rng: np.random.Generator,
    n_vars: tuple[int, int] = (3, 12),
    n_clauses: tuple[int, int] = (2, 20),
    max_len: int = 4,
    source_id: str = "",
) -> CnfInstance:
    n = int(rng.integers(n_vars[0], n_vars[1] + 1))
    m = int(rng.integers(n_clauses[0], n_clauses[1] + 1))
    clauses = []
    for _ in range(m):
        length = int(rng.integers(1, min(max_len, n) + 1))
        variables = rng.choice(n, size=length, replace=False) + 1
        signs = np.where(rng.random(length) < 0.5, 1, -1)
        clauses.append([int(v) for v in variables * signs])
    return CnfInstance(num_vars=n, clauses=clauses, source_id=source_id)


def records_from_table(runtimes) -> list[RuntimeRecord]:
    return [RuntimeRecord(instance_id=f"i{i}", runtimes=row) for i, row in enumerate(runtimes)]


def dataset_from_table(runtimes, paths=None, n_folds: int = 5, cutoff: float = 500.0):
    records = records_from_table(runtimes)
    n_solvers = len(records[0].runtimes)
    config = DatasetConfig(
        cutoff=cutoff, solvers=[f"s{k}" for k in range(n_solvers)], n_folds=n_folds
    )
    paths = paths or [f"i{i}.cnf" for i in range(len(records))]
    return LabeledDataset(records=records, paths=paths, config=config)
