"""Runtime-sensitive regret loss.

For one instance with solver probabilities p and runtimes t, the loss is the
squared gap between the expected runtime under p and the best runtime:

    (sum_k p_k t_k - min_k t_k) ** 2

A batch loss is the mean over instances. Unlike cross-entropy, a wrong choice
costs in proportion to the runtime it wastes.
"""

import numpy as np

from satfolio.neuralnet.model import DimensionMismatch, SolverDistribution
from satfolio.training.dataset import RuntimeRecord


def _as_arrays(
    probs: SolverDistribution | np.ndarray, record: RuntimeRecord | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    p = probs.probs if isinstance(probs, SolverDistribution) else probs
    t = record.runtimes if isinstance(record, RuntimeRecord) else record
    p = np.asarray(p, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if p.ndim != 1 or p.shape != t.shape:
        raise DimensionMismatch(
            f"Probabilities of shape {p.shape} do not match runtimes of shape {t.shape}"
        )
    return p, t


def regret_loss(
    probs: SolverDistribution | np.ndarray, record: RuntimeRecord | np.ndarray
) -> float:
    p, t = _as_arrays(probs, record)
    gap = p @ t - t.min()
    return float(gap * gap)


def regret_loss_with_grad(
    probs: SolverDistribution | np.ndarray, record: RuntimeRecord | np.ndarray
) -> tuple[float, np.ndarray]:
    """Returns the loss and its gradient w.r.t. the probabilities"""
    p, t = _as_arrays(probs, record)
    gap = p @ t - t.min()
    return float(gap * gap), 2.0 * gap * t


def batch_regret_loss(probs: np.ndarray, runtimes: np.ndarray) -> float:
    """Mean loss over instances, rows of `probs` and `runtimes`"""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    runtimes = np.atleast_2d(np.asarray(runtimes, dtype=np.float64))
    if probs.shape != runtimes.shape:
        raise DimensionMismatch(
            f"Probabilities of shape {probs.shape} do not match runtimes of shape "
            f"{runtimes.shape}"
        )
    gaps = np.einsum("ik,ik->i", probs, runtimes) - runtimes.min(axis=1)
    return float(np.mean(gaps * gaps))
