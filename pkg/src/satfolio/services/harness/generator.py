"""Random CNF instances for desk-scale experiments."""

from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

from satfolio.core.cnf import CnfInstance, save_dimacs

MAX_CLAUSE_LENGTH = 5


class SyntheticSpec(BaseModel):
    n_instances: int = Field(default=100, ge=1)
    var_range: tuple[int, int] = (20, 50)
    ratio_range: tuple[float, float] = (3.0, 5.0)
    # probability of clause lengths 1..5
    length_weights: list[float] = [0.0, 0.2, 0.8, 0.0, 0.0]
    # probability that a drawn literal is positive, drawn once per instance
    pos_prob_range: tuple[float, float] = (0.5, 0.5)
    seed: int = Field(default=0, ge=0)
    prefix: str = "inst"

    @model_validator(mode="after")
    def _check_ranges(self) -> "SyntheticSpec":
        v_min, v_max = self.var_range
        if not 1 <= v_min <= v_max:
            raise ValueError(f"Invalid variable range {self.var_range}")
        r_min, r_max = self.ratio_range
        if not 0 < r_min <= r_max:
            raise ValueError(f"Invalid clause/variable ratio range {self.ratio_range}")
        p_min, p_max = self.pos_prob_range
        if not 0 <= p_min <= p_max <= 1:
            raise ValueError(f"Invalid positive literal probability range {self.pos_prob_range}")
        if len(self.length_weights) != MAX_CLAUSE_LENGTH:
            raise ValueError(f"Expected {MAX_CLAUSE_LENGTH} clause length weights")
        if any(w < 0 for w in self.length_weights) or abs(sum(self.length_weights) - 1) > 1e-9:
            raise ValueError(f"Clause length weights must sum to 1: {self.length_weights}")
        return self


def _instance_name(spec: SyntheticSpec, i: int) -> str:
    return f"{spec.prefix}_{i:05d}"


def _draw_instance(spec: SyntheticSpec, rng: np.random.Generator, name: str) -> CnfInstance:
    n = int(rng.integers(spec.var_range[0], spec.var_range[1] + 1))
    m = max(1, round(rng.uniform(*spec.ratio_range) * n))
    pos_prob = rng.uniform(*spec.pos_prob_range)
    lengths = rng.choice(
        np.arange(1, MAX_CLAUSE_LENGTH + 1), size=m, p=np.asarray(spec.length_weights)
    )

    clauses = []
    for length in lengths:
        # a clause never repeats a variable, so it is capped at n literals
        variables = rng.choice(n, size=min(int(length), n), replace=False) + 1
        signs = np.where(rng.random(len(variables)) < pos_prob, 1, -1)
        clauses.append(tuple(int(v) for v in variables * signs))
    return CnfInstance(num_vars=n, clauses=clauses, source_id=name)


def generate_instances(spec: SyntheticSpec) -> list[CnfInstance]:
    rng = np.random.default_rng(spec.seed)
    return [
        _draw_instance(spec, rng, _instance_name(spec, i)) for i in range(spec.n_instances)
    ]


def generate(spec: SyntheticSpec, out_dir: Path | str, verbose: bool = False) -> list[Path]:
    """Writes `spec.n_instances` DIMACS files named `<prefix>_<index>.cnf`"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    paths = []
    for inst in tqdm(generate_instances(spec), desc="Writing instances", disable=not verbose):
        path = out_dir / f"{inst.source_id}.cnf"
        save_dimacs(inst, path)
        paths.append(path)

    logger.info(f"Generated {len(paths)} instances in `{out_dir}`")
    return paths
