"""Runtime labels for instance files, from the simulated oracle or from external
solver binaries.

External solvers are given as command templates such as
`kissat --quiet {instance}`. Every (instance, solver) pair runs as its own
subprocess, at most `jobs` at a time, and is killed once it reaches the cutoff.
Exit codes 0, 10 (satisfiable) and 20 (unsatisfiable) count as a completed run;
timed-out and crashed runs are recorded at the cutoff and flagged.
"""

import asyncio
import shlex
import shutil
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, field_validator, model_validator
from tqdm import tqdm

from satfolio.core.cnf import load_dimacs
from satfolio.services.harness.oracle import OracleSpec, oracle_runtimes
from satfolio.training.dataset import (
    DEFAULT_N_FOLDS,
    DatasetConfig,
    LabeledDataset,
    RuntimeRecord,
)
from satfolio.util.misc import round_ms, stopwatch

INSTANCE_PLACEHOLDER = "{instance}"
SUCCESS_EXIT_CODES = (0, 10, 20)
MIN_RUNTIME = 0.001  # timer resolution, runtimes must stay positive

STATUS_OK = "ok"
STATUS_TIMEOUT = "timeout"
STATUS_CRASH = "crash"


class MissingBinary(ValueError):
    pass


class ExternalSolvers(BaseModel):
    commands: list[str] = Field(min_length=1)
    names: list[str] | None = None
    jobs: int = Field(default=1, ge=1)

    @field_validator("commands")
    @classmethod
    def _check_placeholder(cls, commands):
        for command in commands:
            if INSTANCE_PLACEHOLDER not in command:
                raise ValueError(f"Command `{command}` lacks the {INSTANCE_PLACEHOLDER} placeholder")
        return commands

    @model_validator(mode="after")
    def _check_names(self) -> "ExternalSolvers":
        if self.names is not None and len(self.names) != len(self.commands):
            raise ValueError(f"{len(self.names)} solver names for {len(self.commands)} commands")
        return self

    @property
    def solver_names(self) -> list[str]:
        return self.names or [f"solver_{k + 1}" for k in range(len(self.commands))]


def build_argv(command: str, instance_path: Path | str) -> list[str]:
    argv = [arg.replace(INSTANCE_PLACEHOLDER, str(instance_path)) for arg in shlex.split(command)]
    if shutil.which(argv[0]) is None:
        raise MissingBinary(f"Solver binary not found: `{argv[0]}`")
    return argv


async def run_solver(
    command: str,
    instance_path: Path | str,
    cutoff: float,
    semaphore: asyncio.Semaphore | None = None,
) -> tuple[float, str]:
    """Runs one solver on one instance. Returns the wall-clock seconds, censored
    at `cutoff`, and the run status."""
    argv = build_argv(command, instance_path)
    semaphore = semaphore or asyncio.Semaphore(1)

    async with semaphore:
        with stopwatch() as elapsed:
            try:
                proc = await asyncio.create_subprocess_exec(
                    *argv,
                    stdout=asyncio.subprocess.DEVNULL,
                    stderr=asyncio.subprocess.DEVNULL,
                )
            except FileNotFoundError:
                raise MissingBinary(f"Solver binary not found: `{argv[0]}`") from None
            try:
                await asyncio.wait_for(proc.wait(), timeout=cutoff)
            except asyncio.TimeoutError:
                proc.kill()
                await proc.wait()
                return cutoff, STATUS_TIMEOUT

    if proc.returncode not in SUCCESS_EXIT_CODES:
        logger.warning(
            f"`{argv[0]}` exited with code {proc.returncode} on `{instance_path}`"
        )
        return cutoff, STATUS_CRASH
    return min(max(round_ms(elapsed["seconds"]), MIN_RUNTIME), cutoff), STATUS_OK


async def _run_all(
    paths: list[Path], solvers: ExternalSolvers, cutoff: float, verbose: bool
) -> list[list[tuple[float, str]]]:
    semaphore = asyncio.Semaphore(solvers.jobs)
    progress = tqdm(total=len(paths) * len(solvers.commands), desc="Labeling", disable=not verbose)

    async def _run(command: str, path: Path) -> tuple[float, str]:
        result = await run_solver(command, path, cutoff, semaphore)
        progress.update()
        return result

    tasks = [
        [asyncio.create_task(_run(command, path)) for command in solvers.commands]
        for path in paths
    ]
    try:
        # gathered per instance, so results keep instance x solver order
        return [list(await asyncio.gather(*row)) for row in tasks]
    finally:
        for row in tasks:
            for task in row:
                task.cancel()
        progress.close()


def _filter_by_size(paths: list[Path], max_vars: int | None) -> list[Path]:
    if max_vars is None:
        return paths
    kept = [p for p in paths if load_dimacs(p).num_vars <= max_vars]
    if len(kept) < len(paths):
        logger.info(f"Skipped {len(paths) - len(kept)} instances with more than {max_vars} variables")
    return kept


def label_with_oracle(
    paths: list[Path],
    spec: OracleSpec,
    cutoff: float,
    verbose: bool = False,
) -> tuple[list[RuntimeRecord], dict[tuple[str, int], str]]:
    records = []
    statuses = {}
    for path in tqdm(paths, desc="Labeling", disable=not verbose):
        inst = load_dimacs(path)
        runtimes = oracle_runtimes(inst, spec, cutoff=cutoff)
        for k in np.flatnonzero(runtimes >= cutoff):
            statuses[(inst.source_id, int(k))] = STATUS_TIMEOUT
        records.append(RuntimeRecord(instance_id=inst.source_id, runtimes=runtimes))
    return records, statuses


def label_external(
    paths: list[Path],
    solvers: ExternalSolvers,
    cutoff: float,
    verbose: bool = False,
) -> tuple[list[RuntimeRecord], dict[tuple[str, int], str]]:
    for command in solvers.commands:
        build_argv(command, "")

    results = asyncio.run(_run_all(paths, solvers, cutoff, verbose))
    records = []
    statuses = {}
    for path, row in zip(paths, results):
        for k, (_, status) in enumerate(row):
            if status != STATUS_OK:
                statuses[(path.stem, k)] = status
        records.append(RuntimeRecord(instance_id=path.stem, runtimes=[t for t, _ in row]))
    return records, statuses


def label(
    paths: list[Path | str],
    mode: OracleSpec | ExternalSolvers,
    cutoff: float,
    max_vars: int | None = None,
    fold_seed: int = 0,
    n_folds: int = DEFAULT_N_FOLDS,
    verbose: bool = False,
) -> LabeledDataset:
    """Collects the runtime of every solver on every instance"""
    if cutoff <= 0:
        raise ValueError(f"Cutoff must be positive, got {cutoff}")
    paths = _filter_by_size([Path(p) for p in paths], max_vars)

    if isinstance(mode, OracleSpec):
        records, statuses = label_with_oracle(paths, mode, cutoff, verbose)
    else:
        records, statuses = label_external(paths, mode, cutoff, verbose)

    if statuses:
        logger.info(f"{len(statuses)} runs hit the cutoff or crashed")
    config = DatasetConfig(
        cutoff=cutoff, solvers=mode.solver_names, fold_seed=fold_seed, n_folds=n_folds
    )
    return LabeledDataset(records=records, paths=paths, config=config, statuses=statuses)
