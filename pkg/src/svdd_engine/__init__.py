"""Training and evaluation engine for singing-voice deepfake detection heads
over precomputed embeddings: individual FCN/CNN classifiers, concatenation
fusion, the FIONA gated/projected fusion with a CKA alignment loss, and an
Equal Error Rate evaluator."""

from .cka import cka, cka_loss
from .dataio import (
    EmbeddingDataset,
    PairedDataset,
    SynthConfig,
    pair,
    read_femb,
    stratified_split,
    synth_generate,
    write_femb,
)
from .metrics import ScoreSet, eer, read_scores, roc_points, write_scores
from .models import (
    build_cnn,
    build_concat_fusion,
    build_fcn,
    build_fiona,
    load_checkpoint,
    save_checkpoint,
)
from .objective import LossConfig, cross_entropy, total_loss
from .training import Adam, TrainConfig, TrainReport, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "EmbeddingDataset",
    "LossConfig",
    "PairedDataset",
    "ScoreSet",
    "SynthConfig",
    "TrainConfig",
    "TrainReport",
    "build_cnn",
    "build_concat_fusion",
    "build_fcn",
    "build_fiona",
    "cka",
    "cka_loss",
    "cross_entropy",
    "eer",
    "evaluate",
    "load_checkpoint",
    "pair",
    "read_femb",
    "read_scores",
    "roc_points",
    "save_checkpoint",
    "stratified_split",
    "synth_generate",
    "total_loss",
    "train",
    "write_femb",
    "write_scores",
]
