"""MFCC baseline features: framing, mel filterbank, DCT, and deltas."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, rfft

from .errors import AudioError


@dataclass
class MfccConfig:
    sample_rate: int = 16_000
    n_mfcc: int = 13  # cepstral coefficients per frame (before deltas)
    n_filters: int = 26
    frame_length_s: float = 0.025
    frame_step_s: float = 0.010
    n_fft: int = 512
    add_deltas: bool = True  # appends deltas and delta-deltas (x3 width)

    @property
    def output_dim(self) -> int:
        return self.n_mfcc * (3 if self.add_deltas else 1)


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MfccConfig) -> np.ndarray:
    """Triangular filters, (n_filters, n_fft // 2 + 1)."""
    low, high = hz_to_mel(0.0), hz_to_mel(cfg.sample_rate / 2.0)
    points = mel_to_hz(np.linspace(low, high, cfg.n_filters + 2))
    bins = np.floor((cfg.n_fft + 1) * points / cfg.sample_rate).astype(int)
    bank = np.zeros((cfg.n_filters, cfg.n_fft // 2 + 1))
    for m in range(1, cfg.n_filters + 1):
        left, center, right = bins[m - 1], bins[m], bins[m + 1]
        for k in range(left, center):
            if center > left:
                bank[m - 1, k] = (k - left) / (center - left)
        for k in range(center, right):
            if right > center:
                bank[m - 1, k] = (right - k) / (right - center)
    return bank


def frame_signal(signal: np.ndarray, cfg: MfccConfig) -> np.ndarray:
    length = int(round(cfg.frame_length_s * cfg.sample_rate))
    step = int(round(cfg.frame_step_s * cfg.sample_rate))
    if signal.size < length:
        signal = np.pad(signal, (0, length - signal.size))
    n_frames = 1 + (signal.size - length) // step
    idx = (np.arange(length)[None, :]
           + step * np.arange(n_frames)[:, None])
    return signal[idx] * np.hamming(length)


def mfcc_frames(signal: np.ndarray, cfg: MfccConfig) -> np.ndarray:
    """(n_frames, n_mfcc) cepstra for a mono signal at cfg.sample_rate."""
    if signal.size == 0:
        raise AudioError("cannot compute MFCC of an empty signal")
    frames = frame_signal(np.asarray(signal, dtype=np.float64), cfg)
    spectrum = np.abs(rfft(frames, n=cfg.n_fft, axis=1)) ** 2
    energies = spectrum @ mel_filterbank(cfg).T
    energies = np.maximum(energies, 1e-12)
    cepstra = dct(np.log(energies), type=2, axis=1, norm="ortho")
    return cepstra[:, : cfg.n_mfcc]


def deltas(features: np.ndarray, width: int = 2) -> np.ndarray:
    """Regression-based temporal derivative over a +-width frame window."""
    padded = np.pad(features, ((width, width), (0, 0)), mode="edge")
    denom = 2.0 * sum(k * k for k in range(1, width + 1))
    out = np.zeros_like(features)
    for k in range(1, width + 1):
        out += k * (padded[width + k: padded.shape[0] - width + k]
                    - padded[width - k: -width - k])
    return out / denom


def extract_mfcc_vector(signal: np.ndarray, cfg: MfccConfig) -> np.ndarray:
    """One mean-pooled feature vector of length cfg.output_dim."""
    base = mfcc_frames(signal, cfg)
    if cfg.add_deltas:
        d1 = deltas(base)
        d2 = deltas(d1)
        base = np.concatenate([base, d1, d2], axis=1)
    return base.mean(axis=0)
