from dataclasses import dataclass, field

import numpy as np
from loguru import logger

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = BETA1,
    beta2: float = BETA2,
    eps: float = EPSILON,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update. Moments are kept in float64 and the
    updated tensors keep the dtype of the inputs."""
    if set(params) != set(grads):
        raise ValueError(
            f"Gradient names do not match parameters: {sorted(set(params) ^ set(grads))}"
        )

    t = state.step + 1
    m, v, updated = {}, {}, {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != value.shape:
            raise ValueError(
                f"Gradient of `{name}` has shape {g.shape}, expected {value.shape}"
            )
        m[name] = beta1 * state.m.get(name, 0.0) + (1 - beta1) * g
        v[name] = beta2 * state.v.get(name, 0.0) + (1 - beta2) * g * g
        m_hat = m[name] / (1 - beta1**t)
        v_hat = v[name] / (1 - beta2**t)
        step = lr * m_hat / (np.sqrt(v_hat) + eps)
        updated[name] = (value.astype(np.float64) - step).astype(value.dtype)

    return updated, AdamState(step=t, m=m, v=v)


class EarlyStopping:
    """
    Stops training when the validation loss has not improved for `patience`
    consecutive epochs.
    """

    def __init__(self, patience: int = 10, min_delta: float = 0.0):
        self.patience = patience
        self.min_delta = min_delta
        self.counter = 0
        self.best_loss = None
        self.early_stop = False

    def __call__(self, val_loss: float) -> bool:
        """Updates the tracker and returns whether the loss improved"""
        if self.best_loss is None or self.best_loss - val_loss > self.min_delta:
            self.best_loss = val_loss
            self.counter = 0
            return True

        self.counter += 1
        logger.debug(f"Early stopping counter {self.counter} of {self.patience}")
        if self.counter >= self.patience:
            logger.info("Early stopping")
            self.early_stop = True
        return False
