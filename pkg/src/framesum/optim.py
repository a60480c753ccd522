"""AdamW optimizer state and the warmup + cosine learning-rate schedule."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigurationError, TrainingError


@dataclass
class Parameter:
    """One learnable tensor with its gradient and AdamW moments."""

    name: str
    value: np.ndarray
    grad: np.ndarray = None
    m: np.ndarray = None
    v: np.ndarray = None
    step: int = 0

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.m is None:
            self.m = np.zeros_like(self.value)
        if self.v is None:
            self.v = np.zeros_like(self.value)

    def zero_grad(self):
        self.grad[...] = 0.0


def adamw_step(
    param: Parameter,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> Parameter:
    """Decoupled-weight-decay Adam update with bias correction, in place.

    value -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * value)
    """
    if lr < 0:
        raise ConfigurationError(f"negative learning rate {lr}")
    if not np.all(np.isfinite(param.grad)):
        raise TrainingError(f"non-finite gradient in parameter '{param.name}'")
    g = param.grad
    param.step += 1
    t = param.step
    param.m[...] = beta1 * param.m + (1.0 - beta1) * g
    param.v[...] = beta2 * param.v + (1.0 - beta2) * (g * g)
    m_hat = param.m / (1.0 - beta1**t)
    v_hat = param.v / (1.0 - beta2**t)
    param.value[...] -= lr * (m_hat / (np.sqrt(v_hat) + eps) + weight_decay * param.value)
    return param


@dataclass
class LrSchedule:
    """Linear warmup from 0 to peak, then cosine decay to min_lr.

    peak = base_lr * batch_size / 256 (linear scale rule). The epoch axis is
    fractional; in samples mode the trainer uses one iteration as the unit.
    """

    base_lr: float
    batch_size: int
    warmup_epochs: float
    total_epochs: float
    min_lr: float = 1e-6

    def __post_init__(self):
        if self.total_epochs <= 0:
            raise ConfigurationError(f"total_epochs must be positive, got {self.total_epochs}")
        if not 0 <= self.warmup_epochs < self.total_epochs:
            raise ConfigurationError(
                f"warmup_epochs {self.warmup_epochs} must lie in [0, total_epochs={self.total_epochs})"
            )
        if self.min_lr > self.peak_lr:
            raise ConfigurationError(
                f"min_lr {self.min_lr} exceeds peak lr {self.peak_lr}"
            )

    @property
    def peak_lr(self) -> float:
        return self.base_lr * self.batch_size / 256.0


def lr_at(schedule: LrSchedule, fractional_epoch: float) -> float:
    """Learning rate at a fractional epoch in [0, total_epochs]."""
    e, w, total = fractional_epoch, schedule.warmup_epochs, schedule.total_epochs
    if not 0 <= e <= total:
        raise ConfigurationError(f"epoch {e} outside [0, {total}]")
    peak = schedule.peak_lr
    if e < w:
        return peak * (e / w)
    return schedule.min_lr + (peak - schedule.min_lr) * 0.5 * (
        1.0 + math.cos(math.pi * (e - w) / (total - w))
    )
