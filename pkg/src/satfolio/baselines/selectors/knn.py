import numpy as np

from satfolio.baselines.features import Standardizer
from satfolio.baselines.objects import Selector

DEFAULT_K = 9


def knn_select(
    query: np.ndarray,
    train_features: np.ndarray,
    train_labels: np.ndarray,
    k: int = DEFAULT_K,
    n_solvers: int | None = None,
) -> int:
    """Majority vote over the best solvers of the `k` nearest training points.

    Features are expected to be standardized already. Equidistant points are
    taken in training order, and vote ties go to the lowest solver index.
    """
    train_labels = np.asarray(train_labels, dtype=np.int64)
    if len(train_labels) == 0:
        raise ValueError("kNN needs a nonempty training set")
    distances = np.sum((np.asarray(train_features) - np.asarray(query)) ** 2, axis=1)
    order = np.lexsort((np.arange(len(distances)), distances))
    nearest = order[: min(k, len(order))]
    minlength = n_solvers if n_solvers is not None else int(train_labels.max()) + 1
    return int(np.bincount(train_labels[nearest], minlength=minlength).argmax())


class KnnSelector(Selector):
    name = "knn"

    def __init__(self, k: int = DEFAULT_K):
        self.k = k
        self.standardizer: Standardizer | None = None
        self.features: np.ndarray | None = None
        self.labels: np.ndarray | None = None
        self.n_solvers = 0

    def fit(self, features: np.ndarray, runtimes: np.ndarray) -> "KnnSelector":
        self._check_training_set(features, runtimes)
        runtimes = np.asarray(runtimes, dtype=np.float64)
        self.standardizer = Standardizer().fit(features)
        self.features = self.standardizer.transform(features)
        self.labels = np.argmin(runtimes, axis=1)
        self.n_solvers = runtimes.shape[1]
        return self

    def select(self, features: np.ndarray) -> np.ndarray:
        if self.standardizer is None:
            raise ValueError("Selector used before fit")
        queries = self.standardizer.transform(np.atleast_2d(features))
        return np.array(
            [
                knn_select(q, self.features, self.labels, self.k, self.n_solvers)
                for q in queries
            ],
            dtype=np.int64,
        )
