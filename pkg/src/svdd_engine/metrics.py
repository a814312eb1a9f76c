"""Equal Error Rate over scored trials, plus the score-file format.

Scores are fake-class posteriors: higher means more deepfake-like. The FAR/FRR
convention: FAR is the fraction of bonafide trials scored at or above the
threshold (bonafide flagged as deepfake), FRR the fraction of deepfake trials
below it (deepfakes missed). The EER crossing value is identical under the
opposite convention, so reported numbers are comparable either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import FormatError, MetricUndefinedError, NumericError

LABEL_NAMES = {0: "bonafide", 1: "deepfake"}
NAME_LABELS = {v: k for k, v in LABEL_NAMES.items()}


@dataclass
class ScoreSet:
    scores: np.ndarray
    labels: np.ndarray  # 0 = bonafide, 1 = deepfake
    ids: Optional[list] = field(default=None)

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.scores.shape != self.labels.shape or self.scores.ndim != 1:
            raise MetricUndefinedError("scores and labels must be matching 1-d arrays")
        if not np.isfinite(self.scores).all():
            raise NumericError("scores contain non-finite values")

    @property
    def n(self) -> int:
        return self.scores.size


def _split_classes(s: ScoreSet):
    bona = s.scores[s.labels == 0]
    deep = s.scores[s.labels == 1]
    if bona.size == 0 or deep.size == 0:
        raise MetricUndefinedError(
            "EER undefined: need at least one bonafide and one deepfake trial"
        )
    return bona, deep


def roc_points(s: ScoreSet) -> list[tuple[float, float, float]]:
    """(threshold, FAR, FRR) at every distinct score plus -inf/+inf sentinels.

    FAR is non-increasing and FRR non-decreasing as the threshold rises.
    """
    bona, deep = _split_classes(s)
    thresholds = np.concatenate(([-np.inf], np.unique(s.scores), [np.inf]))
    bona_sorted = np.sort(bona)
    deep_sorted = np.sort(deep)
    # count of scores >= t via searchsorted on the sorted class scores
    far = 1.0 - np.searchsorted(bona_sorted, thresholds, side="left") / bona.size
    frr = np.searchsorted(deep_sorted, thresholds, side="left") / deep.size
    return list(zip(thresholds.tolist(), far.tolist(), frr.tolist()))


def eer(s: ScoreSet) -> float:
    """FAR value where FAR = FRR, linearly interpolated between operating points."""
    points = roc_points(s)
    far = np.array([p[1] for p in points])
    frr = np.array([p[2] for p in points])
    diff = far - frr
    # diff starts at +1 and ends at -1; find the sign change
    for i in range(len(diff) - 1):
        if diff[i] == 0.0:
            return float(far[i])
        if diff[i] > 0.0 >= diff[i + 1]:
            alpha = diff[i] / (diff[i] - diff[i + 1])
            return float(far[i] + alpha * (far[i + 1] - far[i]))
    return float(far[-1])


def write_scores(s: ScoreSet, path):
    """One line per trial: `<utt_id> <label> <score>`."""
    ids = s.ids if s.ids is not None else [f"utt{i:06d}" for i in range(s.n)]
    with open(path, "w", encoding="utf-8") as fh:
        for utt, label, score in zip(ids, s.labels, s.scores):
            fh.write(f"{utt} {LABEL_NAMES[int(label)]} {float(score)!r}\n")


def read_scores(path) -> ScoreSet:
    ids, labels, scores = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(
                    f"{path}:{lineno}: expected '<utt_id> <label> <score>', "
                    f"got {len(parts)} fields"
                )
            utt, label, score = parts
            if label not in NAME_LABELS:
                raise FormatError(
                    f"{path}:{lineno}: label must be bonafide or deepfake, "
                    f"got {label!r}"
                )
            try:
                value = float(score)
            except ValueError:
                raise FormatError(
                    f"{path}:{lineno}: score {score!r} is not a number"
                ) from None
            ids.append(utt)
            labels.append(NAME_LABELS[label])
            scores.append(value)
    return ScoreSet(scores=np.array(scores), labels=np.array(labels), ids=ids)
