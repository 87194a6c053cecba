"""Simulated solver runtimes.

A solver profile maps an instance to

    base * exp(w . f) * (1 + alpha * u_order) * (1 + beta * u_names) * noise

where f are the global features, u_order in [0, 1) hashes the clause sequence
with variables renumbered by first occurrence (unchanged by renaming variables),
u_names hashes the literal sequence itself, and noise is log-normal, keyed on the
instance id so that shuffled copies of one instance share it.
"""

import numpy as np
from pydantic import BaseModel, Field, field_validator

from satfolio.baselines.features import GLOBAL_FEATURE_NAMES, global_features
from satfolio.core.cnf import CnfInstance
from satfolio.util.misc import stable_hash64

_TWO_64 = float(2**64)


class SolverProfile(BaseModel):
    name: str
    base_cost: float = Field(gt=0)
    # sensitivity per global feature, by feature name
    weights: dict[str, float] = {}
    clause_order_sensitivity: float = Field(default=0.0, ge=0)
    relabel_sensitivity: float = Field(default=0.0, ge=0)
    noise_scale: float = Field(default=0.0, ge=0)

    @field_validator("weights")
    @classmethod
    def _check_feature_names(cls, weights):
        unknown = set(weights) - set(GLOBAL_FEATURE_NAMES)
        if unknown:
            raise ValueError(f"Unknown global features: {sorted(unknown)}")
        return weights

    def weight_vector(self) -> np.ndarray:
        return np.array([self.weights.get(name, 0.0) for name in GLOBAL_FEATURE_NAMES])


class OracleSpec(BaseModel):
    solvers: list[SolverProfile] = Field(min_length=1)
    seed: int = Field(default=0, ge=0)

    @property
    def solver_names(self) -> list[str]:
        return [s.name for s in self.solvers]


def _unit_hash(*key) -> float:
    return stable_hash64(key) / _TWO_64


def _canonical_clauses(inst: CnfInstance) -> tuple:
    """Clause sequence with variables renumbered 1, 2, ... in order of first occurrence"""
    names = {}
    return tuple(
        tuple(names.setdefault(abs(lit), len(names) + 1) * (1 if lit > 0 else -1) for lit in clause)
        for clause in inst.clauses
    )


def oracle_runtimes(
    inst: CnfInstance, spec: OracleSpec, cutoff: float | None = None
) -> np.ndarray:
    """Simulated runtime of every solver in seconds, censored at `cutoff`"""
    features = global_features(inst)
    canonical = _canonical_clauses(inst)
    instance_key = stable_hash64(inst.source_id)

    runtimes = np.empty(len(spec.solvers))
    for k, profile in enumerate(spec.solvers):
        runtime = profile.base_cost * np.exp(profile.weight_vector() @ features)
        if profile.clause_order_sensitivity:
            u = _unit_hash("order", spec.seed, k, canonical)
            runtime *= 1 + profile.clause_order_sensitivity * u
        if profile.relabel_sensitivity:
            u = _unit_hash("names", spec.seed, k, inst.clauses)
            runtime *= 1 + profile.relabel_sensitivity * u
        if profile.noise_scale:
            rng = np.random.default_rng([spec.seed, instance_key, k])
            runtime *= np.exp(profile.noise_scale * rng.standard_normal())
        runtimes[k] = runtime

    if cutoff is not None:
        runtimes = np.minimum(runtimes, cutoff)
    return runtimes


def default_oracle_spec(seed: int = 0) -> OracleSpec:
    """Three solvers with crossing strengths and clause-order sensitivity"""
    return OracleSpec(
        seed=seed,
        solvers=[
            SolverProfile(
                name="order_sensitive",
                base_cost=5.0,
                weights={"horn_fraction": 2.0, "clause_var_ratio": 0.3},
                clause_order_sensitivity=1.0,
                relabel_sensitivity=0.1,
                noise_scale=0.1,
            ),
            SolverProfile(
                name="binary_friendly",
                base_cost=8.0,
                weights={"horn_fraction": -1.5, "binary_fraction": -1.0},
                clause_order_sensitivity=0.5,
                relabel_sensitivity=0.05,
                noise_scale=0.1,
            ),
            SolverProfile(
                name="dense_friendly",
                base_cost=3.0,
                weights={"clause_var_ratio": 0.6, "ternary_fraction": -1.0},
                clause_order_sensitivity=0.25,
                relabel_sensitivity=0.05,
                noise_scale=0.1,
            ),
        ],
    )


def horn_threshold_oracle_spec(seed: int = 0, noise_scale: float = 0.0) -> OracleSpec:
    """Three solvers whose best choice switches at Horn fractions 1/3 and 2/3:
    log-runtimes are 6h, 2 and 6(1 - h) above log(10) for a Horn fraction h"""
    return OracleSpec(
        seed=seed,
        solvers=[
            SolverProfile(
                name="horn_low",
                base_cost=10.0,
                weights={"horn_fraction": 6.0},
                noise_scale=noise_scale,
            ),
            SolverProfile(
                name="horn_mid",
                base_cost=10.0 * np.exp(2.0),
                noise_scale=noise_scale,
            ),
            SolverProfile(
                name="horn_high",
                base_cost=10.0 * np.exp(6.0),
                weights={"horn_fraction": -6.0},
                noise_scale=noise_scale,
            ),
        ],
    )


ORACLE_PRESETS = {
    "default": default_oracle_spec,
    "horn_threshold": horn_threshold_oracle_spec,
}
