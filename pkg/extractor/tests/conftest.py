import json

import numpy as np
import pytest
from scipy.io import wavfile


def write_tone(path, freq=440.0, seconds=1.0, rate=16_000, amplitude=0.5):
    t = np.arange(int(seconds * rate)) / rate
    signal = amplitude * np.sin(2 * np.pi * freq * t)
    wavfile.write(path, rate, (signal * 32767).astype(np.int16))
    return path


def write_silence(path, seconds=1.0, rate=16_000):
    wavfile.write(path, rate, np.zeros(int(seconds * rate), dtype=np.int16))
    return path


@pytest.fixture
def toy_manifest(tmp_path):
    """Three decodable clips plus their JSONL manifest."""
    clips = [
        ("clip-000", write_tone(tmp_path / "a.wav", freq=440.0), "bonafide"),
        ("clip-001", write_tone(tmp_path / "b.wav", freq=880.0), "deepfake"),
        ("clip-002", write_silence(tmp_path / "c.wav"), "bonafide"),
    ]
    manifest = tmp_path / "clips.jsonl"
    manifest.write_text("".join(
        json.dumps({"id": i, "path": str(p), "label": lab}) + "\n"
        for i, p, lab in clips))
    return manifest
