"""WAV decoding and resampling."""

from __future__ import annotations

import math

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import AudioError


def load_wav(path) -> tuple[np.ndarray, int]:
    """Decode a WAV file to mono float64 in [-1, 1] plus its sample rate."""
    try:
        rate, data = wavfile.read(path)
    except (ValueError, OSError) as exc:
        raise AudioError(f"cannot decode {path}: {exc}") from None
    if data.size == 0:
        raise AudioError(f"{path}: empty audio stream")
    if data.ndim == 2:
        data = data.mean(axis=1)
    if np.issubdtype(data.dtype, np.integer):
        scale = float(np.iinfo(data.dtype).max)
        data = data.astype(np.float64) / scale
    else:
        data = data.astype(np.float64)
    if not np.isfinite(data).all():
        raise AudioError(f"{path}: non-finite samples")
    return data, int(rate)


def resample(signal: np.ndarray, rate: int, target_rate: int) -> np.ndarray:
    if rate == target_rate:
        return signal
    if rate <= 0 or target_rate <= 0:
        raise AudioError(f"invalid sample rate {rate} -> {target_rate}")
    g = math.gcd(rate, target_rate)
    return resample_poly(signal, target_rate // g, rate // g)


def load_resampled(path, target_rate: int) -> np.ndarray:
    signal, rate = load_wav(path)
    return resample(signal, rate, target_rate)
