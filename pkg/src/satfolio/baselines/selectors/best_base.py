import numpy as np

from satfolio.baselines.objects import Selector


class BestBaseSelector(Selector):
    """Always picks the solver with the lowest mean runtime on the training set"""

    name = "best_base"

    def __init__(self):
        self.solver: int | None = None

    def fit(self, features: np.ndarray, runtimes: np.ndarray) -> "BestBaseSelector":
        self._check_training_set(features, runtimes)
        self.solver = int(np.argmin(np.asarray(runtimes, dtype=np.float64).mean(axis=0)))
        return self

    def select(self, features: np.ndarray) -> np.ndarray:
        if self.solver is None:
            raise ValueError("Selector used before fit")
        return np.full(len(features), self.solver, dtype=np.int64)
