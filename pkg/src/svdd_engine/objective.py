"""Cross-entropy, the CKA-weighted total loss, and their configuration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .cka import DEFAULT_EPSILON, cka_loss
from .errors import ConfigError, DataError

PROB_FLOOR = 1e-12


@dataclass
class LossConfig:
    cka_weight: float = 0.1  # the lambda knob on the alignment term
    cka_epsilon: float = DEFAULT_EPSILON
    label_smoothing: float = 0.0

    def __post_init__(self):
        if self.cka_weight < 0:
            raise ConfigError(f"cka_weight must be >= 0, got {self.cka_weight}")
        if not 0.0 <= self.label_smoothing <= 0.2:
            raise ConfigError(
                f"label_smoothing must be in [0, 0.2], got {self.label_smoothing}"
            )


def one_hot(labels, smoothing: float = 0.0) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise DataError("labels must be a non-empty 1-d array")
    if not np.isin(labels, (0, 1)).all():
        bad = labels[~np.isin(labels, (0, 1))][0]
        raise DataError(f"labels must be 0 (bonafide) or 1 (deepfake), got {bad}")
    y = np.zeros((labels.size, 2))
    y[np.arange(labels.size), labels.astype(int)] = 1.0
    if smoothing:
        y = y * (1.0 - smoothing) + smoothing / 2.0
    return y


def cross_entropy(probs: Tensor, labels, label_smoothing: float = 0.0) -> Tensor:
    """Mean negative log-likelihood; probabilities floored before the log."""
    y = one_hot(labels, label_smoothing)
    if probs.shape != y.shape:
        raise DataError(
            f"probabilities {probs.shape} do not match {y.shape[0]} labels"
        )
    p = ad.clip(probs, PROB_FLOOR, 1.0)
    n = y.shape[0]
    return ad.sum_all(ad.mul(Tensor(y), ad.log(p))) * (-1.0 / n)


def total_loss(probs: Tensor, labels, branch_x: Tensor, branch_y: Tensor,
               cfg: LossConfig) -> Tensor:
    """L = L_CE + lambda * (1 - CKA); reduces to cross-entropy when lambda=0."""
    ce = cross_entropy(probs, labels, cfg.label_smoothing)
    if cfg.cka_weight == 0.0:
        return ce
    return ce + cfg.cka_weight * cka_loss(branch_x, branch_y, cfg.cka_epsilon)
