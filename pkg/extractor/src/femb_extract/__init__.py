"""femb-extract: pooled foundation-model / MFCC embeddings to FEMB files."""

from .errors import (
    AudioError,
    DimMismatchError,
    ExtractError,
    ManifestError,
    ModelUnavailableError,
    SpecError,
)
from .extract import extract, resolve_backend
from .femb import manifest_path, write_femb
from .mfcc import MfccConfig, extract_mfcc_vector, mfcc_frames
from .spec import (
    ExtractorSpec,
    MODEL_HUB_IDS,
    ManifestEntry,
    expected_dim,
    normalize_model_id,
    read_audio_manifest,
    target_sample_rate,
)

__version__ = "0.1.0"

__all__ = [
    "AudioError",
    "DimMismatchError",
    "ExtractError",
    "ExtractorSpec",
    "ManifestEntry",
    "ManifestError",
    "MfccConfig",
    "ModelUnavailableError",
    "MODEL_HUB_IDS",
    "SpecError",
    "expected_dim",
    "extract",
    "extract_mfcc_vector",
    "manifest_path",
    "mfcc_frames",
    "normalize_model_id",
    "read_audio_manifest",
    "resolve_backend",
    "target_sample_rate",
    "write_femb",
]
