"""Adam optimizer and convergence detection shared by both network trainers.

Parameters travel as flat lists of numpy arrays so the dense regressor
and the LSTM can share one optimizer. Training stops when the relative
improvement of the epoch loss over ``plateau_patience`` epochs falls
below ``plateau_tolerance``, or at ``max_epochs``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class TrainConfig:
    seed: int
    batch_size: int = 8
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_epochs: int = 5000
    plateau_patience: int = 50
    plateau_tolerance: float = 1e-4

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not (0.0 < self.beta1 < self.beta2 < 1.0):
            raise ConfigError("Adam moments need 0 < beta1 < beta2 < 1")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.max_epochs < 1 or self.plateau_patience < 1:
            raise ConfigError("max_epochs and plateau_patience must be >= 1")
        if self.plateau_tolerance <= 0:
            raise ConfigError("plateau_tolerance must be positive")


@dataclass
class AdamState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0


def init_adam(params: list[np.ndarray]) -> AdamState:
    return AdamState(
        first_moment=[np.zeros_like(p) for p in params],
        second_moment=[np.zeros_like(p) for p in params],
    )


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> None:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ShapeError("parameter, gradient, and state lists must align")
    state.step_count += 1
    t = state.step_count
    bias1 = 1.0 - cfg.beta1**t
    bias2 = 1.0 - cfg.beta2**t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape:
            raise ShapeError(
                f"gradient shape {g.shape} does not match parameter shape {p.shape}"
            )
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        p -= cfg.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + cfg.epsilon)


class PlateauDetector:
    """Halts when the loss improved by less than ``tolerance`` (relative)
    over the last ``patience`` epochs."""

    def __init__(self, patience: int, tolerance: float):
        self.patience = patience
        self.tolerance = tolerance
        self._history: list[float] = []

    def update(self, loss: float) -> bool:
        self._history.append(loss)
        if len(self._history) <= self.patience:
            return False
        reference = self._history[-self.patience - 1]
        improvement = (reference - loss) / max(abs(reference), 1e-300)
        return improvement < self.tolerance


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    """Deterministic per-epoch shuffle, reseeded by epoch index."""
    return np.random.default_rng([seed, 1, epoch]).permutation(n)


def dropout_stream(seed: int) -> np.random.Generator:
    """Dedicated RNG stream for dropout masks during training."""
    return np.random.default_rng([seed, 2])
