"""How much do solver runtimes move when an instance is only reordered?

For a sample of instances, one solver is measured on `n_shuffles` clause
shuffles and `n_shuffles` variable relabelings of every instance. Rows are
sorted by ascending mean runtime over all shuffles.
"""

import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from loguru import logger
from tqdm import tqdm

from satfolio.core.cnf import CnfInstance, PermutationKind, PermutationSpec, permute, save_dimacs
from satfolio.services.harness.labeling import ExternalSolvers, label_external
from satfolio.services.harness.oracle import OracleSpec, oracle_runtimes
from satfolio.util.csv import write_csv

DEFAULT_SAMPLE_SIZE = 30
DEFAULT_SHUFFLES = 20

Measure = Callable[[list[CnfInstance]], np.ndarray]  # instances -> [n x K] runtimes


@dataclass(frozen=True)
class PermutationRow:
    instance_id: str
    clause_runtimes: np.ndarray
    variable_runtimes: np.ndarray

    @property
    def mean_runtime(self) -> float:
        return float(np.concatenate([self.clause_runtimes, self.variable_runtimes]).mean())

    def stats(self) -> dict:
        res = {"instance_id": self.instance_id, "mean_runtime": repr(self.mean_runtime)}
        for prefix, values in (("clause", self.clause_runtimes), ("variable", self.variable_runtimes)):
            res[f"{prefix}_mean"] = repr(float(values.mean()))
            res[f"{prefix}_min"] = repr(float(values.min()))
            res[f"{prefix}_max"] = repr(float(values.max()))
            res[f"{prefix}_std"] = repr(float(values.std()))
        return res


@dataclass
class PermutationStudy:
    solver: int
    rows: list[PermutationRow]

    @property
    def clause_dominates_fraction(self) -> float:
        """Share of instances where clause shuffles spread runtimes more than
        variable relabelings"""
        if not self.rows:
            return 0.0
        return float(
            np.mean([r.clause_runtimes.std() > r.variable_runtimes.std() for r in self.rows])
        )


STUDY_FIELDS = ["instance_id", "mean_runtime"] + [
    f"{prefix}_{stat}"
    for prefix in ("clause", "variable")
    for stat in ("mean", "min", "max", "std")
]


def oracle_measure(spec: OracleSpec, cutoff: float | None = None) -> Measure:
    def _measure(instances: list[CnfInstance]) -> np.ndarray:
        return np.stack([oracle_runtimes(inst, spec, cutoff) for inst in instances])

    return _measure


def external_measure(solvers: ExternalSolvers, cutoff: float) -> Measure:
    """Runs the solvers on shuffled copies written to a temporary directory"""

    def _measure(instances: list[CnfInstance]) -> np.ndarray:
        with tempfile.TemporaryDirectory() as tmp_dir:
            paths = []
            for i, inst in enumerate(instances):
                path = Path(tmp_dir) / f"{inst.source_id or 'instance'}_{i:03d}.cnf"
                save_dimacs(inst, path)
                paths.append(path)
            records, _ = label_external(paths, solvers, cutoff)
        return np.stack([r.runtimes for r in records])

    return _measure


def permute_study(
    instances: Sequence[CnfInstance],
    measure: Measure,
    n_shuffles: int = DEFAULT_SHUFFLES,
    sample_size: int = DEFAULT_SAMPLE_SIZE,
    solver: int = 0,
    seed: int = 0,
    verbose: bool = False,
) -> PermutationStudy:
    if n_shuffles < 1:
        raise ValueError(f"Need at least one shuffle, got {n_shuffles}")
    rng = np.random.default_rng(seed)
    if len(instances) > sample_size:
        chosen = np.sort(rng.choice(len(instances), size=sample_size, replace=False))
        instances = [instances[i] for i in chosen]
    logger.info(f"Shuffling {len(instances)} instances {n_shuffles} times each")

    rows = []
    for inst in tqdm(instances, desc="Permutation study", disable=not verbose):
        runtimes = {}
        for kind in (PermutationKind.CLAUSE_SHUFFLE, PermutationKind.VARIABLE_SHUFFLE):
            seeds = rng.integers(0, 2**63, size=n_shuffles)
            shuffled = [permute(inst, PermutationSpec(kind, int(s))) for s in seeds]
            runtimes[kind] = measure(shuffled)[:, solver]
        rows.append(
            PermutationRow(
                instance_id=inst.source_id,
                clause_runtimes=runtimes[PermutationKind.CLAUSE_SHUFFLE],
                variable_runtimes=runtimes[PermutationKind.VARIABLE_SHUFFLE],
            )
        )

    rows.sort(key=lambda r: r.mean_runtime)
    return PermutationStudy(solver=solver, rows=rows)


def write_study(study: PermutationStudy, path: Path | str):
    write_csv([r.stats() for r in study.rows], path, STUDY_FIELDS)
