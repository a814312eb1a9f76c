"""Extraction specs: the supported models, their dims, and sample rates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError, SpecError

# Hub checkpoint per supported model. "mfcc" is computed locally.
MODEL_HUB_IDS = {
    "unispeech-sat": "microsoft/unispeech-sat-base",
    "wavlm": "microsoft/wavlm-base",
    "wav2vec2": "facebook/wav2vec2-base",
    "x-vector": "speechbrain/spkrec-xvect-voxceleb",
    "mert-v1-330m": "m-a-p/MERT-v1-330M",
    "mert-v1-95m": "m-a-p/MERT-v1-95M",
    "mert-v0-public": "m-a-p/MERT-v0-public",
    "mert-v0": "m-a-p/MERT-v0",
    "music2vec-v1": "m-a-p/music2vec-v1",
    "mfcc": None,
}

DEFAULT_RATE = 16_000
DEFAULT_MFCC_DIM = 39  # 13 coefficients + deltas + delta-deltas

VALID_LABELS = ("bonafide", "deepfake")


def expected_dim(model: str) -> int:
    """Embedding width per model family: 1024 / 512 / 768."""
    model = normalize_model_id(model)
    if model == "mert-v1-330m":
        return 1024
    if model == "x-vector":
        return 512
    if model == "mfcc":
        return DEFAULT_MFCC_DIM
    return 768


def target_sample_rate(model: str) -> int:
    """MERT-v1 models consume 24 kHz audio; everything else 16 kHz."""
    model = normalize_model_id(model)
    if model in ("mert-v1-330m", "mert-v1-95m"):
        return 24_000
    return DEFAULT_RATE


def normalize_model_id(model: str) -> str:
    key = model.strip().lower()
    if key not in MODEL_HUB_IDS:
        known = ", ".join(sorted(MODEL_HUB_IDS))
        raise SpecError(f"unknown model {model!r}; supported: {known}")
    return key


@dataclass
class ManifestEntry:
    id: str
    path: Path
    label: str


@dataclass
class ExtractorSpec:
    model: str
    entries: list = field(default_factory=list)
    sample_rate: int = 0  # 0 means "use the model's required rate"
    dim: int = 0  # 0 means "use the model's table entry"

    def __post_init__(self):
        self.model = normalize_model_id(self.model)
        if not self.sample_rate:
            self.sample_rate = target_sample_rate(self.model)
        if not self.dim:
            self.dim = expected_dim(self.model)

    @property
    def hub_id(self):
        return MODEL_HUB_IDS[self.model]


def read_audio_manifest(path) -> list[ManifestEntry]:
    """JSONL with one {id, path, label} object per line."""
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    entries = []
    seen = set()
    root = path.parent
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from None
        for key in ("id", "path", "label"):
            if key not in obj:
                raise ManifestError(f"{path}:{lineno}: missing field {key!r}")
        if obj["label"] not in VALID_LABELS:
            raise ManifestError(
                f"{path}:{lineno}: label must be one of {VALID_LABELS}, "
                f"got {obj['label']!r}"
            )
        if obj["id"] in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate id {obj['id']!r}")
        seen.add(obj["id"])
        clip = Path(obj["path"])
        if not clip.is_absolute():
            clip = root / clip
        entries.append(ManifestEntry(id=obj["id"], path=clip,
                                     label=obj["label"]))
    if not entries:
        raise ManifestError(f"{path}: manifest is empty")
    return entries
