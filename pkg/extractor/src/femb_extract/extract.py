"""Embedding extraction: per-clip decode -> resample -> model -> mean pool.

Model backends are looked up in a registry keyed by model id, so tests can
inject lightweight stand-ins and the hub-backed loaders are only imported
when actually used. A backend is any callable mapping a mono float64
signal at the spec's sample rate to a 1-d feature vector.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .audio import load_resampled
from .errors import AudioError, DimMismatchError, ModelUnavailableError
from .femb import manifest_path, write_femb
from .mfcc import MfccConfig, extract_mfcc_vector
from .spec import ExtractorSpec


def _hub_backend(spec: ExtractorSpec):
    """Mean-pooled last hidden layer of a hub transformer checkpoint."""
    if spec.model == "x-vector":
        # the x-vector checkpoint is a speechbrain model, not a transformer
        try:
            from speechbrain.inference import EncoderClassifier  # type: ignore
        except ImportError:
            raise ModelUnavailableError(
                "x-vector extraction requires the speechbrain package"
            ) from None
        import torch

        classifier = EncoderClassifier.from_hparams(source=spec.hub_id)
        classifier.eval()

        def run(signal: np.ndarray) -> np.ndarray:
            with torch.no_grad():
                batch = torch.as_tensor(signal, dtype=torch.float32)[None, :]
                emb = classifier.encode_batch(batch)
            return emb.squeeze().cpu().numpy().astype(np.float64)

        return run

    try:
        import torch
        from transformers import AutoModel
    except ImportError:
        raise ModelUnavailableError(
            "hub extraction requires torch and transformers"
        ) from None
    try:
        model = AutoModel.from_pretrained(spec.hub_id, trust_remote_code=True)
    except Exception as exc:
        raise ModelUnavailableError(
            f"cannot load {spec.hub_id}: {exc}"
        ) from None
    model.eval()

    def run(signal: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            batch = torch.as_tensor(signal, dtype=torch.float32)[None, :]
            hidden = model(batch).last_hidden_state
        return hidden.mean(dim=1).squeeze(0).cpu().numpy().astype(np.float64)

    return run


def _mfcc_backend(spec: ExtractorSpec):
    cfg = MfccConfig(sample_rate=spec.sample_rate,
                     n_mfcc=spec.dim // 3 if spec.dim % 3 == 0 else spec.dim,
                     add_deltas=spec.dim % 3 == 0)
    if cfg.output_dim != spec.dim:
        raise DimMismatchError(
            f"cannot configure MFCC for dim {spec.dim}"
        )
    return lambda signal: extract_mfcc_vector(signal, cfg)


def resolve_backend(spec: ExtractorSpec, backend=None):
    if backend is not None:
        return backend
    if spec.model == "mfcc":
        return _mfcc_backend(spec)
    return _hub_backend(spec)


def _process_clip(spec: ExtractorSpec, backend, entry):
    signal = load_resampled(entry.path, spec.sample_rate)
    vector = np.asarray(backend(signal), dtype=np.float64).reshape(-1)
    if vector.shape[0] != spec.dim:
        raise DimMismatchError(
            f"{entry.id}: model emitted dim {vector.shape[0]}, "
            f"expected {spec.dim} for {spec.model}"
        )
    if not np.isfinite(vector).all():
        raise AudioError(f"{entry.id}: non-finite feature values")
    return vector.astype(np.float32)


def extract(spec: ExtractorSpec, out_path, backend=None, jobs: int = 1) -> dict:
    """Write <out_path> (+ .jsonl manifest) and a rejects file.

    Undecodable clips are skipped and listed in <out_path stem>.rejects.jsonl;
    dimension mismatches abort the whole run (a wrong checkpoint is never a
    per-clip problem). Rows appear in manifest order regardless of worker
    completion order. Returns {"rows": ..., "rejects": ...}.
    """
    out_path = Path(out_path)
    backend = resolve_backend(spec, backend)

    def safe(entry):
        try:
            return _process_clip(spec, backend, entry), None
        except AudioError as exc:
            return None, str(exc)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(safe, spec.entries))
    else:
        results = [safe(e) for e in spec.entries]

    vectors, ids, labels, rejects = [], [], [], []
    for entry, (vector, error) in zip(spec.entries, results):
        if error is not None:
            rejects.append({"id": entry.id, "path": str(entry.path),
                            "reason": error})
        else:
            vectors.append(vector)
            ids.append(entry.id)
            labels.append(entry.label)

    if not vectors:
        raise AudioError("no clip in the manifest could be processed")
    write_femb(out_path, np.stack(vectors), ids, labels)

    rejects_path = out_path.with_name(out_path.stem + ".rejects.jsonl")
    rejects_path.write_text(
        "".join(json.dumps(r) + "\n" for r in rejects))
    return {"rows": len(ids), "rejects": len(rejects),
            "out": str(out_path), "manifest": str(manifest_path(out_path)),
            "rejects_file": str(rejects_path)}
