"""Feature-based solver selectors.

A selector is fitted on the global feature vectors and runtimes of training
instances, then picks one solver per feature vector. Implementations live in
`baselines/selectors/` and are discovered by name.
"""

import importlib
import inspect
import sys
from abc import ABC, abstractmethod
from functools import lru_cache
from pathlib import Path

import numpy as np

from satfolio.baselines.features import global_feature_matrix
from satfolio.core.cnf import CnfInstance


class Selector(ABC):
    name: str

    @abstractmethod
    def fit(self, features: np.ndarray, runtimes: np.ndarray) -> "Selector":
        """Fits on a [n x d] feature matrix and the [n x K] runtime table"""
        pass

    @abstractmethod
    def select(self, features: np.ndarray) -> np.ndarray:
        """Returns one solver index per row of a [n x d] feature matrix"""
        pass

    def select_instances(self, instances: list[CnfInstance]) -> np.ndarray:
        return self.select(global_feature_matrix(instances))

    @staticmethod
    def _check_training_set(features: np.ndarray, runtimes: np.ndarray):
        if len(features) == 0:
            raise ValueError("Cannot fit a selector on an empty training set")
        if len(features) != len(runtimes):
            raise ValueError(
                f"{len(features)} feature rows but {len(runtimes)} runtime rows"
            )


@lru_cache()
def _get_selector_cls_by_name() -> dict[str, type[Selector]]:
    """Collects selector classes from the 'selectors' directory"""
    selectors_dir = Path(__file__).parent / "selectors"
    package_name = f"{sys.modules[__name__].__package__}.selectors"

    selectors_cls = {}
    for file_path in sorted(selectors_dir.glob("*.py")):
        module = importlib.import_module(f"{package_name}.{file_path.stem}")
        for _, cls in inspect.getmembers(module):
            if inspect.isclass(cls) and issubclass(cls, Selector) and cls != Selector:
                selectors_cls[cls.name] = cls

    return selectors_cls


def get_selector_names() -> list[str]:
    return sorted(_get_selector_cls_by_name())


def get_selector(name: str, **kwargs) -> Selector:
    try:
        cls = _get_selector_cls_by_name()[name]
    except KeyError:
        raise ValueError(
            f"Unknown baseline `{name}`, available: {', '.join(get_selector_names())}"
        ) from None
    return cls(**kwargs)
