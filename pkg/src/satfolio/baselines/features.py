"""Instance-level handcrafted features used by the feature-based baselines.

Every statistic is independent of clause order and of variable names, so an
instance and any of its shuffles share one feature vector.
"""

from dataclasses import dataclass

import numpy as np

from satfolio.core.cnf import CnfInstance
from satfolio.core.graph import occurrences

GLOBAL_FEATURE_NAMES = [
    "n_vars",
    "n_clauses",
    "clause_var_ratio",
    "horn_fraction",
    "binary_fraction",
    "ternary_fraction",
    "clause_length_mean",
    "clause_length_min",
    "clause_length_max",
    "clause_length_std",
    "var_occurrence_mean",
    "var_occurrence_std",
    "clause_positive_fraction_mean",
    "clause_positive_fraction_std",
    "var_polarity_ratio_mean",
    "var_polarity_ratio_std",
]
GLOBAL_FEATURE_VERSION = 1


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    if len(values) == 0:
        return 0.0, 0.0
    return float(values.mean()), float(values.std())


def global_features(inst: CnfInstance) -> np.ndarray:
    occ = occurrences(inst)
    n, m = inst.num_vars, inst.num_clauses
    lengths = occ.clause_len.astype(np.float64)

    pos_count = np.bincount(occ.var[occ.is_pos], minlength=n).astype(np.float64)
    neg_count = np.bincount(occ.var[~occ.is_pos], minlength=n).astype(np.float64)

    if m:
        fractions = [
            np.mean(occ.clause_is_horn),
            np.mean(occ.clause_len == 2),
            np.mean(occ.clause_len == 3),
        ]
        length_stats = [lengths.mean(), lengths.min(), lengths.max(), lengths.std()]
    else:
        fractions = [0.0, 0.0, 0.0]
        length_stats = [0.0, 0.0, 0.0, 0.0]

    res = [n, m, m / n, *fractions, *length_stats]
    res += _mean_std(pos_count + neg_count)
    res += _mean_std(occ.clause_npos / np.maximum(occ.clause_len, 1))
    res += _mean_std(pos_count / (neg_count + 1))
    return np.array(res, dtype=np.float64)


def global_feature_matrix(instances) -> np.ndarray:
    rows = [global_features(inst) for inst in instances]
    if not rows:
        return np.zeros((0, len(GLOBAL_FEATURE_NAMES)))
    return np.stack(rows)


@dataclass
class Standardizer:
    """Z-scores features with statistics of the training rows. Constant
    features are passed through unscaled."""

    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        constant = std == 0
        self.mean = np.where(constant, 0.0, mean)
        self.std = np.where(constant, 1.0, std)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.mean is None:
            raise ValueError("Standardizer used before fit")
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)
