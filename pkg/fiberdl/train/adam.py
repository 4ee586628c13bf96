"""
Adam optimizer over the flat real parameter vector, and the training
hyperparameters
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from fiberdl import constants
from fiberdl.errors import ConfigError


@dataclass
class TrainConfig:
    learning_rate: float = constants.LEARNING_RATE
    batch_size: int = constants.BATCH_SIZE
    iterations: int = 1000
    power_set_dbm: List[float] = field(default_factory=lambda: [0.0])
    seed: int = 0
    adam_beta1: float = constants.ADAM_BETA1
    adam_beta2: float = constants.ADAM_BETA2
    adam_eps: float = constants.ADAM_EPS
    eval_interval: int = 0
    eval_frames: int = 10
    log_interval: int = 100

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.iterations < 0:
            raise ConfigError("iterations must not be negative")
        if not self.power_set_dbm:
            raise ConfigError("power_set_dbm must not be empty")
        self.power_set_dbm = [float(p) for p in self.power_set_dbm]
        if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0):
            raise ConfigError("Adam decay rates must lie in [0, 1)")


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros(cls, size: int):
        return cls(np.zeros(size), np.zeros(size), 0)

    def to_dict(self):
        return {
            "first_moment": self.first_moment.tolist(),
            "second_moment": self.second_moment.tolist(),
            "step_count": self.step_count,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            np.asarray(data["first_moment"], dtype=np.float64),
            np.asarray(data["second_moment"], dtype=np.float64),
            int(data["step_count"]),
        )


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray, cfg: TrainConfig, mask: Optional[np.ndarray] = None):
    """Bias-corrected Adam update. Returns (params, state) without touching the inputs."""
    if not params.shape == grads.shape == state.first_moment.shape:
        raise ValueError("parameter, gradient and moment shapes differ")
    if mask is not None:
        grads = np.where(mask, grads, 0.0)

    step = state.step_count + 1
    first = cfg.adam_beta1 * state.first_moment + (1.0 - cfg.adam_beta1) * grads
    second = cfg.adam_beta2 * state.second_moment + (1.0 - cfg.adam_beta2) * grads ** 2
    first_hat = first / (1.0 - cfg.adam_beta1 ** step)
    second_hat = second / (1.0 - cfg.adam_beta2 ** step)
    update = cfg.learning_rate * first_hat / (np.sqrt(second_hat) + cfg.adam_eps)
    if mask is not None:
        update = np.where(mask, update, 0.0)
    return params - update, AdamState(first, second, step)
