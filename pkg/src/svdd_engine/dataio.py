"""Embedding datasets: FEMB binary container, manifests, splits, synthesis.

FEMB layout: magic "FEMB" | payload | u32 LE CRC32(payload), where the payload
is u32 LE version=1 | u32 LE count | u32 LE dim | count*dim f32 LE row-major.
The companion manifest `<stem>.jsonl` holds one object per row with fields
`id`, `label` ("bonafide"|"deepfake") and `row`.

Embeddings live on disk as f32 (that is what upstream extractors emit) and are
widened to f64 when batched into the engine.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, DataError, FormatError

FEMB_MAGIC = b"FEMB"
FEMB_VERSION = 1
LABEL_NAMES = {0: "bonafide", 1: "deepfake"}
NAME_LABELS = {v: k for k, v in LABEL_NAMES.items()}
MIN_SYNTH_DIM = 8


def _check_vectors(vectors: np.ndarray, ids, labels):
    if vectors.ndim != 2:
        raise DataError(f"vectors must be 2-d, got shape {vectors.shape}")
    if len(ids) != vectors.shape[0] or len(labels) != vectors.shape[0]:
        raise DataError(
            f"row count mismatch: {vectors.shape[0]} vectors, "
            f"{len(ids)} ids, {len(labels)} labels"
        )
    if len(set(ids)) != len(ids):
        raise DataError("utterance ids are not unique")
    if not np.isfinite(vectors).all():
        raise DataError("vectors contain NaN or Inf")


@dataclass
class EmbeddingDataset:
    """Fixed-dimension f32 embedding vectors with ids and binary labels."""

    vectors: np.ndarray  # (count, dim) float32
    ids: list
    labels: np.ndarray  # 0 = bonafide, 1 = deepfake
    source_tag: str = ""

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        _check_vectors(self.vectors, self.ids, self.labels)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def batch(self, indices) -> list[np.ndarray]:
        return [self.vectors[indices].astype(np.float64)]

    def subset(self, indices) -> "EmbeddingDataset":
        indices = np.asarray(indices)
        return EmbeddingDataset(
            vectors=self.vectors[indices],
            ids=[self.ids[i] for i in indices],
            labels=self.labels[indices],
            source_tag=self.source_tag,
        )


@dataclass
class PairedDataset:
    """Two embedding sources joined on utterance id with agreeing labels."""

    vectors_a: np.ndarray
    vectors_b: np.ndarray
    ids: list
    labels: np.ndarray
    source_tags: tuple = ("", "")

    def __post_init__(self):
        self.vectors_a = np.asarray(self.vectors_a, dtype=np.float32)
        self.vectors_b = np.asarray(self.vectors_b, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        _check_vectors(self.vectors_a, self.ids, self.labels)
        _check_vectors(self.vectors_b, self.ids, self.labels)

    @property
    def n(self) -> int:
        return self.vectors_a.shape[0]

    @property
    def dims(self) -> tuple[int, int]:
        return self.vectors_a.shape[1], self.vectors_b.shape[1]

    def batch(self, indices) -> list[np.ndarray]:
        return [self.vectors_a[indices].astype(np.float64),
                self.vectors_b[indices].astype(np.float64)]

    def subset(self, indices) -> "PairedDataset":
        indices = np.asarray(indices)
        return PairedDataset(
            vectors_a=self.vectors_a[indices],
            vectors_b=self.vectors_b[indices],
            ids=[self.ids[i] for i in indices],
            labels=self.labels[indices],
            source_tags=self.source_tags,
        )

    def branch(self, which: int) -> EmbeddingDataset:
        vectors = self.vectors_a if which == 0 else self.vectors_b
        return EmbeddingDataset(vectors=vectors, ids=list(self.ids),
                                labels=self.labels,
                                source_tag=self.source_tags[which])


# ---------------------------------------------------------------------------
# FEMB read/write


def manifest_path(femb_path) -> Path:
    return Path(femb_path).with_suffix(".jsonl")


def write_femb(dataset: EmbeddingDataset, path):
    path = Path(path)
    payload = struct.pack("<III", FEMB_VERSION, dataset.n, dataset.dim)
    payload += np.ascontiguousarray(dataset.vectors, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(FEMB_MAGIC + payload + struct.pack("<I", zlib.crc32(payload)))
    with open(manifest_path(path), "w", encoding="utf-8") as fh:
        for row, (utt, label) in enumerate(zip(dataset.ids, dataset.labels)):
            fh.write(json.dumps(
                {"id": str(utt), "label": LABEL_NAMES[int(label)], "row": row}
            ) + "\n")


def read_femb(path, source_tag: Optional[str] = None) -> EmbeddingDataset:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[:4] != FEMB_MAGIC:
        raise FormatError(f"{path}: bad magic, not a FEMB file")
    if len(raw) < 4 + 12 + 4:
        raise FormatError(f"{path}: truncated FEMB file")
    payload, (crc,) = raw[4:-4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(payload) != crc:
        raise FormatError(f"{path}: CRC mismatch, file corrupt or truncated")
    version, count, dim = struct.unpack("<III", payload[:12])
    if version != FEMB_VERSION:
        raise FormatError(f"{path}: unsupported FEMB version {version}")
    body = payload[12:]
    if len(body) != 4 * count * dim:
        raise FormatError(
            f"{path}: payload holds {len(body)} bytes, "
            f"expected {4 * count * dim} for {count}x{dim} f32"
        )
    vectors = np.frombuffer(body, dtype="<f4").reshape(count, dim)
    ids, labels = _read_manifest(manifest_path(path), count)
    return EmbeddingDataset(vectors=vectors.copy(), ids=ids, labels=labels,
                            source_tag=source_tag or path.stem)


def _read_manifest(path: Path, count: int):
    if not path.exists():
        raise DataError(f"manifest {path} not found")
    ids: list = [None] * count
    labels = np.full(count, -1, dtype=np.int64)
    seen_ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            try:
                utt, label, row = rec["id"], rec["label"], rec["row"]
            except (KeyError, TypeError):
                raise DataError(
                    f"{path}:{lineno}: record needs id, label and row fields"
                ) from None
            if label not in NAME_LABELS:
                raise DataError(f"{path}:{lineno}: unknown label {label!r}")
            if not isinstance(row, int) or not 0 <= row < count:
                raise DataError(
                    f"{path}:{lineno}: row {row!r} out of range for {count} rows"
                )
            if labels[row] != -1:
                raise DataError(f"{path}:{lineno}: duplicate row {row}")
            if utt in seen_ids:
                raise DataError(f"{path}:{lineno}: duplicate id {utt!r}")
            seen_ids.add(utt)
            ids[row] = str(utt)
            labels[row] = NAME_LABELS[label]
    if (labels == -1).any():
        missing = int(np.flatnonzero(labels == -1)[0])
        raise DataError(f"{path}: no manifest entry for row {missing}")
    return ids, labels


# ---------------------------------------------------------------------------
# pairing and splitting


def pair(a: EmbeddingDataset, b: EmbeddingDataset) -> PairedDataset:
    """Inner join on utterance id, ordered by sorted id; labels must agree."""
    index_a = {utt: i for i, utt in enumerate(a.ids)}
    index_b = {utt: i for i, utt in enumerate(b.ids)}
    common = sorted(set(index_a) & set(index_b))
    if not common:
        raise DataError(
            f"no overlapping utterance ids between {a.source_tag!r} "
            f"and {b.source_tag!r}"
        )
    for utt in common:
        if a.labels[index_a[utt]] != b.labels[index_b[utt]]:
            raise DataError(f"label conflict for id {utt!r} between sources")
    ia = [index_a[u] for u in common]
    ib = [index_b[u] for u in common]
    return PairedDataset(
        vectors_a=a.vectors[ia],
        vectors_b=b.vectors[ib],
        ids=common,
        labels=a.labels[ia],
        source_tags=(a.source_tag, b.source_tag),
    )


def stratified_split(dataset, fraction: float, seed: int):
    """Seeded (train, held-out) split preserving class proportions.

    Works for both EmbeddingDataset and PairedDataset via their subset().
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    held: list[int] = []
    train: list[int] = []
    for cls in (0, 1):
        idx = np.flatnonzero(dataset.labels == cls)
        if idx.size < 2:
            raise DataError(
                f"class {LABEL_NAMES[cls]} has {idx.size} samples, need >= 2"
            )
        k = int(round(idx.size * fraction))
        k = min(max(k, 1), idx.size - 1)
        perm = rng.permutation(idx.size)
        held.extend(idx[perm[:k]].tolist())
        train.extend(idx[perm[k:]].tolist())
    return dataset.subset(sorted(train)), dataset.subset(sorted(held))


# ---------------------------------------------------------------------------
# synthetic complementary-modality generator


@dataclass
class SynthConfig:
    """Two-modality Gaussian data with tunable cross-modal complementarity.

    Each modality carries the class signal along one unit direction; the noise
    on those discriminative coordinates is correlated across modalities with
    correlation cos(theta). theta=0 makes the second modality redundant,
    theta=pi/2 makes the modalities fully complementary (averaging them halves
    the noise variance). Off-direction coordinates are pure isotropic noise.
    """

    n_per_class: int
    dim_a: int = 24
    dim_b: int = 24
    theta: float = 0.0
    sigma: float = 0.3
    separation: float = 2.0
    seed: int = 0
    direction_a: Optional[np.ndarray] = field(default=None, repr=False)
    direction_b: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.n_per_class < 1:
            raise ConfigError(f"n_per_class must be >= 1, got {self.n_per_class}")
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        for d in (self.dim_a, self.dim_b):
            if d < MIN_SYNTH_DIM:
                raise ConfigError(f"dims must be >= {MIN_SYNTH_DIM}, got {d}")
        if self.separation <= 0:
            raise ConfigError(f"separation must be > 0, got {self.separation}")


def single_modality_bayes_error(cfg: SynthConfig) -> float:
    """Closed-form error of the optimal single-modality classifier."""
    return float(ndtr(-cfg.separation / (2.0 * cfg.sigma)))


def sigma_for_bayes_error(error: float, separation: float = 2.0) -> float:
    """Noise scale giving a target single-modality Bayes error."""
    if not 0.0 < error < 0.5:
        raise ConfigError(f"target Bayes error must be in (0, 0.5), got {error}")
    return separation / (2.0 * float(ndtri(1.0 - error)))


def _unit(direction, dim: int, name: str) -> np.ndarray:
    if direction is None:
        return np.ones(dim) / np.sqrt(dim)
    w = np.asarray(direction, dtype=np.float64)
    if w.shape != (dim,):
        raise ConfigError(f"{name} must have shape ({dim},), got {w.shape}")
    norm = np.linalg.norm(w)
    if norm == 0:
        raise ConfigError(f"{name} must be nonzero")
    return w / norm


def synth_generate(cfg: SynthConfig) -> PairedDataset:
    rng = np.random.default_rng(cfg.seed)
    wa = _unit(cfg.direction_a, cfg.dim_a, "direction_a")
    wb = _unit(cfg.direction_b, cfg.dim_b, "direction_b")
    n = cfg.n_per_class
    half = cfg.separation / 2.0
    cos_t, sin_t = np.cos(cfg.theta), np.sin(cfg.theta)

    blocks_a, blocks_b, labels = [], [], []
    for cls, sign in ((0, -1.0), (1, 1.0)):
        ga = rng.standard_normal((n, cfg.dim_a))
        gb = rng.standard_normal((n, cfg.dim_b))
        e_shared = rng.standard_normal(n)
        e_private = rng.standard_normal(n)
        noise_a = e_shared
        noise_b = cos_t * e_shared + sin_t * e_private
        # replace the along-direction noise so its cross-modal correlation
        # is exactly cos(theta); the orthogonal complement stays isotropic
        xa = cfg.sigma * (ga - (ga @ wa)[:, None] * wa)
        xa += (sign * half + cfg.sigma * noise_a)[:, None] * wa
        xb = cfg.sigma * (gb - (gb @ wb)[:, None] * wb)
        xb += (sign * half + cfg.sigma * noise_b)[:, None] * wb
        blocks_a.append(xa)
        blocks_b.append(xb)
        labels.append(np.full(n, cls))

    ids = [f"synth-{i:06d}" for i in range(2 * n)]
    return PairedDataset(
        vectors_a=np.concatenate(blocks_a).astype(np.float32),
        vectors_b=np.concatenate(blocks_b).astype(np.float32),
        ids=ids,
        labels=np.concatenate(labels),
        source_tags=("synth-a", "synth-b"),
    )
