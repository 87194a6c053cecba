"""Per-solver ridge regression of runtimes on standardized global features.

Each solver gets its own model minimizing

    ||y - (X w + b)||^2 / n + alpha ||w||^2

in closed form. The intercept is not penalized. Dividing the residual by the
number of rows makes the fit identical when the training set is duplicated.
"""

from dataclasses import dataclass

import numpy as np

from satfolio.baselines.features import Standardizer
from satfolio.baselines.objects import Selector

DEFAULT_ALPHA = 1.0


@dataclass
class RidgeModel:
    standardizer: Standardizer
    coef: np.ndarray  # [d x K]
    intercept: np.ndarray  # [K]

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Predicted [n x K] runtimes"""
        X = self.standardizer.transform(np.atleast_2d(features))
        return X @ self.coef + self.intercept


def ridge_fit(
    features: np.ndarray, runtimes: np.ndarray, alpha: float = DEFAULT_ALPHA
) -> RidgeModel:
    features = np.asarray(features, dtype=np.float64)
    runtimes = np.asarray(runtimes, dtype=np.float64)
    if alpha <= 0:
        raise ValueError(f"Regularization must be positive, got {alpha}")

    standardizer = Standardizer().fit(features)
    X = standardizer.transform(features)
    n, d = X.shape

    Xb = np.column_stack([np.ones(n), X])
    penalty = np.eye(d + 1)
    penalty[0, 0] = 0.0  # don't regularize the intercept

    A = Xb.T @ Xb + n * alpha * penalty
    beta = np.linalg.solve(A, Xb.T @ runtimes)
    return RidgeModel(standardizer=standardizer, coef=beta[1:], intercept=beta[0])


def ridge_select(model: RidgeModel, features: np.ndarray) -> np.ndarray:
    """Solver with the shortest predicted runtime, lowest index on ties"""
    return np.argmin(model.predict(features), axis=1)


class RidgeSelector(Selector):
    name = "ridge"

    def __init__(self, alpha: float = DEFAULT_ALPHA):
        self.alpha = alpha
        self.model: RidgeModel | None = None

    def fit(self, features: np.ndarray, runtimes: np.ndarray) -> "RidgeSelector":
        self._check_training_set(features, runtimes)
        self.model = ridge_fit(features, runtimes, self.alpha)
        return self

    def select(self, features: np.ndarray) -> np.ndarray:
        if self.model is None:
            raise ValueError("Selector used before fit")
        return ridge_select(self.model, features)
