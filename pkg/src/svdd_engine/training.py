"""Adam optimization, the epoch loop with early stopping, and evaluation."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .autodiff import Tensor
from .cka import cka
from .errors import ConfigError, DataError, DegenerateBatchError, NumericError
from .metrics import ScoreSet, eer
from .models import Model
from .objective import LossConfig, cross_entropy, total_loss

EVAL_CHUNK = 256


@dataclass
class TrainConfig:
    epochs: int = 50
    learning_rate: float = 1e-3
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    early_stop_patience: int = 5
    seed: int = 0
    cka_weight: float = 0.1
    cka_epsilon: float = 1e-12
    label_smoothing: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.early_stop_patience < 1:
            raise ConfigError(
                f"early_stop_patience must be >= 1, got {self.early_stop_patience}"
            )

    def loss_config(self) -> LossConfig:
        return LossConfig(cka_weight=self.cka_weight,
                          cka_epsilon=self.cka_epsilon,
                          label_smoothing=self.label_smoothing)


@dataclass
class TrainReport:
    epochs_completed: int = 0
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_eer: list = field(default_factory=list)
    mean_batch_cka: Optional[list] = None  # per epoch, FIONA only
    best_epoch: int = 0
    stopped_early: bool = False
    skipped_batches: int = 0
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "epochs_completed": self.epochs_completed,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "val_eer": self.val_eer,
            "mean_batch_cka": self.mean_batch_cka,
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
            "skipped_batches": self.skipped_batches,
            "wall_time_s": self.wall_time_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainReport":
        return cls(**json.loads(text))


class Adam:
    """Standard bias-corrected Adam over a named-parameter dict."""

    def __init__(self, params: dict[str, Tensor], learning_rate: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.params = params
        self.lr = learning_rate
        self.beta1, self.beta2, self.epsilon = beta1, beta2, epsilon
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if not np.isfinite(g).all():
                raise NumericError(f"non-finite gradient for parameter {name!r}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data = p.data - self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.epsilon)


def _dataset_loss(model: Model, dataset, cfg: TrainConfig) -> float:
    """Mean inference-mode loss over a dataset, computed in chunks."""
    fiona = model.arch == "fiona"
    loss_cfg = cfg.loss_config()
    total = 0.0
    for idx in _eval_chunks(dataset.n, min_chunk=2 if fiona else 1):
        inputs = [Tensor(a) for a in dataset.batch(idx)]
        result = model.forward(inputs, training=False)
        labels = dataset.labels[idx]
        if fiona:
            loss = total_loss(result.probs, labels, result.branches.projected_a,
                              result.branches.projected_b, loss_cfg)
        else:
            loss = cross_entropy(result.probs, labels, cfg.label_smoothing)
        total += loss.item() * len(idx)
    return total / dataset.n


def _eval_chunks(n: int, min_chunk: int = 1):
    """Contiguous chunks of about EVAL_CHUNK rows, never below min_chunk."""
    start = 0
    while start < n:
        end = min(start + EVAL_CHUNK, n)
        if n - end == 1 and min_chunk > 1:
            end = n  # fold a would-be singleton remainder into this chunk
        yield np.arange(start, end)
        start = end


def evaluate(model: Model, dataset) -> ScoreSet:
    """Deepfake-class posterior per utterance, dropout off."""
    if dataset.n == 0:
        raise DataError("cannot evaluate an empty dataset")
    fiona = model.arch == "fiona"
    scores = np.empty(dataset.n)
    for idx in _eval_chunks(dataset.n, min_chunk=2 if fiona else 1):
        inputs = [Tensor(a) for a in dataset.batch(idx)]
        result = model.forward(inputs, training=False)
        scores[idx] = result.probs.data[:, 1]
    return ScoreSet(scores=scores, labels=dataset.labels.copy(),
                    ids=list(dataset.ids))


def train(model: Model, train_set, val_set, cfg: TrainConfig) -> TrainReport:
    """Seeded epoch loop; restores the best-validation-loss parameters.

    Batches are reshuffled per epoch with a PCG64 stream derived from
    cfg.seed; a second independent stream drives dropout masks. The final
    short batch is dropped when a fusion model would see fewer than 2 rows.
    Degenerate CKA batches are skipped and counted in the report.
    """
    if train_set.n == 0 or val_set.n == 0:
        raise DataError("train and validation sets must be non-empty")
    fusion = model.arch in ("concat", "fiona")
    fiona = model.arch == "fiona"
    if fusion and cfg.batch_size < 2:
        raise ConfigError("fusion models need batch_size >= 2")

    shuffle_ss, dropout_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    dropout_rng = np.random.default_rng(dropout_ss)
    optimizer = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2,
                     cfg.adam_epsilon)
    loss_cfg = cfg.loss_config()

    report = TrainReport()
    if fiona:
        report.mean_batch_cka = []
    best_loss = np.inf
    best_snapshot = model.snapshot()
    epochs_without_improvement = 0
    started = time.perf_counter()

    for epoch in range(1, cfg.epochs + 1):
        perm = shuffle_rng.permutation(train_set.n)
        epoch_loss = 0.0
        epoch_rows = 0
        epoch_cka: list[float] = []
        for start in range(0, train_set.n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            if fusion and len(idx) < 2:
                continue
            inputs = [Tensor(a) for a in train_set.batch(idx)]
            labels = train_set.labels[idx]
            try:
                result = model.forward(inputs, training=True, rng=dropout_rng)
                if fiona:
                    pa, pb = (result.branches.projected_a,
                              result.branches.projected_b)
                    loss = total_loss(result.probs, labels, pa, pb, loss_cfg)
                    epoch_cka.append(cka(pa.data, pb.data, cfg.cka_epsilon))
                else:
                    loss = cross_entropy(result.probs, labels,
                                         cfg.label_smoothing)
            except DegenerateBatchError:
                report.skipped_batches += 1
                continue
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += loss.item() * len(idx)
            epoch_rows += len(idx)

        report.epochs_completed = epoch
        report.train_loss.append(epoch_loss / max(epoch_rows, 1))
        val_loss = _dataset_loss(model, val_set, cfg)
        report.val_loss.append(val_loss)
        report.val_eer.append(eer(evaluate(model, val_set)))
        if fiona:
            report.mean_batch_cka.append(
                float(np.mean(epoch_cka)) if epoch_cka else float("nan")
            )

        if val_loss < best_loss:
            best_loss = val_loss
            report.best_epoch = epoch
            best_snapshot = model.snapshot()
            epochs_without_improvement = 0
        else:
            epochs_without_improvement += 1
            if epochs_without_improvement >= cfg.early_stop_patience:
                report.stopped_early = True
                break

    model.restore(best_snapshot)
    report.wall_time_s = time.perf_counter() - started
    return report
