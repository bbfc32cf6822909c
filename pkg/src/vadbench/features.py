"""Frame-level acoustic features: MFCC and GFCC, 13 static dims -> 39 total.

Both front ends share the same frame grid as labeling (25 ms / 10 ms), apply
pre-emphasis and a Hamming window, and produce 12 cepstral coefficients (C0
discarded) plus log frame energy. Delta and delta-delta append to 39 dims;
per-utterance mean/variance normalization comes last.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .corpus import FrameParams

PREEMPHASIS = 0.97
FFT_SIZE = 512
NUM_MEL_FILTERS = 24
NUM_GAMMATONE_FILTERS = 64
FMIN_HZ = 50.0
LOG_FLOOR = 1e-10
CMVN_STD_FLOOR = 1e-8
DELTA_WINDOW = 2

_KIND_CODES = {"mfcc": 0, "gfcc": 1}
_KIND_NAMES = {code: name for name, code in _KIND_CODES.items()}


def preemphasize(samples: np.ndarray, coeff: float = PREEMPHASIS) -> np.ndarray:
    """y[n] = x[n] - coeff * x[n-1], with y[0] = x[0]."""
    samples = np.asarray(samples, dtype=np.float64)
    out = np.empty_like(samples)
    if len(samples):
        out[0] = samples[0]
        out[1:] = samples[1:] - coeff * samples[:-1]
    return out


def frame_signal(samples: np.ndarray, params: FrameParams) -> np.ndarray:
    """Windowed frames (T, window_samples) on the shared grid, Hamming."""
    count = params.num_frames(len(samples))
    window = np.hamming(params.window_samples)
    if count == 0:
        return np.zeros((0, params.window_samples))
    starts = np.arange(count) * params.hop_samples
    return samples[starts[:, None] + np.arange(params.window_samples)] * window


def hz2mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel2hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def hz2erb(f):
    """ERB-rate scale (cochlear place): 21.4 * log10(0.00437 f + 1)."""
    return 21.4 * np.log10(0.00437 * np.asarray(f, dtype=np.float64) + 1.0)


def erb2hz(e):
    return (10.0 ** (np.asarray(e, dtype=np.float64) / 21.4) - 1.0) / 0.00437


def erb_bandwidth(f):
    """Equivalent rectangular bandwidth (Hz) at center frequency f."""
    return 24.7 * (4.37 * np.asarray(f, dtype=np.float64) / 1000.0 + 1.0)


def mel_filterbank(num_filters: int = NUM_MEL_FILTERS, nfft: int = FFT_SIZE,
                   rate: int = 16000, fmin: float = FMIN_HZ
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Triangular mel filters on the rfft grid, each normalized to unit area.

    Returns (weights [num_filters, nfft//2 + 1], center frequencies in Hz).
    """
    fmax = rate / 2.0
    points_hz = mel2hz(np.linspace(hz2mel(fmin), hz2mel(fmax), num_filters + 2))
    bin_freqs = np.arange(nfft // 2 + 1) * (rate / nfft)
    weights = np.zeros((num_filters, len(bin_freqs)))
    for m in range(num_filters):
        lo, center, hi = points_hz[m], points_hz[m + 1], points_hz[m + 2]
        rising = (bin_freqs - lo) / (center - lo)
        falling = (hi - bin_freqs) / (hi - center)
        tri = np.maximum(0.0, np.minimum(rising, falling))
        total = tri.sum()
        if total <= 0.0:
            raise ValueError(f"mel filter {m} covers no FFT bins (nfft too small)")
        weights[m] = tri / total
    return weights, points_hz[1:-1]


def gammatone_weights(num_filters: int = NUM_GAMMATONE_FILTERS, nfft: int = FFT_SIZE,
                      rate: int = 16000, fmin: float = FMIN_HZ
                      ) -> tuple[np.ndarray, np.ndarray]:
    """4th-order gammatone magnitude responses on the rfft grid.

    Centers are spaced uniformly on the ERB-rate scale over [fmin, rate/2];
    each filter is the peak-normalized response (1 + (df/b)^2)^-2 with
    b = 1.019 * ERB(fc), applied as a weighting of the power spectrum.
    """
    centers = erb2hz(np.linspace(hz2erb(fmin), hz2erb(rate / 2.0), num_filters))
    bin_freqs = np.arange(nfft // 2 + 1) * (rate / nfft)
    bandwidths = 1.019 * erb_bandwidth(centers)
    delta = bin_freqs[None, :] - centers[:, None]
    weights = (1.0 + (delta / bandwidths[:, None]) ** 2) ** -2.0
    return weights, centers


def _cepstra(filter_energies: np.ndarray, num_keep: int = 12) -> np.ndarray:
    """Orthonormal DCT-II of log filter energies; C0 dropped, C1..C12 kept."""
    logged = np.log(np.maximum(filter_energies, LOG_FLOOR))
    return dct(logged, type=2, norm="ortho", axis=1)[:, 1:num_keep + 1]


def _static_features(samples: np.ndarray, weights: np.ndarray,
                     params: FrameParams, nfft: int) -> np.ndarray:
    frames = frame_signal(preemphasize(samples), params)
    power = np.abs(np.fft.rfft(frames, nfft, axis=1)) ** 2
    cepstra = _cepstra(power @ weights.T)
    log_energy = np.log(np.maximum(np.sum(frames * frames, axis=1), LOG_FLOOR))
    return np.hstack([cepstra, log_energy[:, None]])


def mfcc(samples: np.ndarray, params: FrameParams | None = None,
         num_filters: int = NUM_MEL_FILTERS, nfft: int = FFT_SIZE) -> np.ndarray:
    """13 static MFCC dims per frame: C1..C12 + log frame energy."""
    params = params or FrameParams()
    weights, _ = mel_filterbank(num_filters, nfft, params.rate)
    return _static_features(samples, weights, params, nfft)


def gfcc(samples: np.ndarray, params: FrameParams | None = None,
         num_filters: int = NUM_GAMMATONE_FILTERS, nfft: int = FFT_SIZE) -> np.ndarray:
    """13 static GFCC dims per frame: C1..C12 + log frame energy."""
    params = params or FrameParams()
    weights, _ = gammatone_weights(num_filters, nfft, params.rate)
    return _static_features(samples, weights, params, nfft)


def delta(features: np.ndarray, window: int = DELTA_WINDOW) -> np.ndarray:
    """Regression deltas over +-window frames with replicated edges."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] == 0:
        return features.copy()
    padded = np.pad(features, ((window, window), (0, 0)), mode="edge")
    denom = 2.0 * sum(k * k for k in range(1, window + 1))
    out = np.zeros_like(features)
    T = features.shape[0]
    for k in range(1, window + 1):
        out += k * (padded[window + k:window + k + T] - padded[window - k:window - k + T])
    return out / denom


def add_deltas(static: np.ndarray, window: int = DELTA_WINDOW) -> np.ndarray:
    """Append delta and delta-delta: (T, d) -> (T, 3d)."""
    d1 = delta(static, window)
    d2 = delta(d1, window)
    return np.hstack([static, d1, d2])


def cmvn(features: np.ndarray, std_floor: float = CMVN_STD_FLOOR) -> np.ndarray:
    """Per-utterance, per-dimension mean/variance normalization.

    A single-frame utterance gets mean subtraction only (variance undefined).
    """
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] == 0:
        return features.copy()
    centered = features - features.mean(axis=0, keepdims=True)
    if features.shape[0] == 1:
        return centered
    std = features.std(axis=0, keepdims=True)
    return centered / np.maximum(std, std_floor)


def extract_features(samples: np.ndarray, kind: str = "mfcc",
                     params: FrameParams | None = None,
                     num_filters: int | None = None,
                     nfft: int = FFT_SIZE,
                     apply_cmvn: bool = True) -> np.ndarray:
    """Full front end: static 13 dims -> +deltas (39) -> optional CMVN."""
    params = params or FrameParams()
    if kind == "mfcc":
        static = mfcc(samples, params, num_filters or NUM_MEL_FILTERS, nfft)
    elif kind == "gfcc":
        static = gfcc(samples, params, num_filters or NUM_GAMMATONE_FILTERS, nfft)
    else:
        raise ValueError(f"unknown feature kind {kind!r}")
    full = add_deltas(static)
    return cmvn(full) if apply_cmvn else full


# ---------------------------------------------------------------------------
# Feature file container
# ---------------------------------------------------------------------------

_MAGIC = b"VFE1"
_HEADER = struct.Struct("<4sBBHIIdd")  # magic, version, kind, dims, frames, rate, window, hop


def write_features(path: str | Path, features: np.ndarray, kind: str,
                   params: FrameParams | None = None,
                   meta: dict | None = None) -> None:
    """Binary container (header + row-major float32) plus a JSON sidecar."""
    params = params or FrameParams()
    features = np.ascontiguousarray(features, dtype=np.float32)
    if features.ndim != 2:
        raise ValueError("features must be 2-D (frames, dims)")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(_MAGIC, 1, _KIND_CODES[kind], features.shape[1],
                          features.shape[0], params.rate,
                          params.window_seconds, params.hop_seconds)
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(features.tobytes())
    sidecar = {
        "kind": kind,
        "dims": int(features.shape[1]),
        "frames": int(features.shape[0]),
        "rate": params.rate,
        "window_seconds": params.window_seconds,
        "hop_seconds": params.hop_seconds,
    }
    sidecar.update(meta or {})
    with open(str(path) + ".meta", "w", encoding="utf-8") as handle:
        json.dump(sidecar, handle, sort_keys=True, indent=2)
        handle.write("\n")


def read_features(path: str | Path) -> tuple[np.ndarray, dict]:
    with open(path, "rb") as handle:
        raw = handle.read()
    if len(raw) < _HEADER.size:
        raise ValueError("feature file too short")
    magic, version, kind_code, dims, frames, rate, window, hop = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != 1:
        raise ValueError("not a feature container (bad magic/version)")
    payload = raw[_HEADER.size:]
    if len(payload) != frames * dims * 4:
        raise ValueError("feature payload size mismatch")
    data = np.frombuffer(payload, dtype="<f4").reshape(frames, dims)
    header = {
        "kind": _KIND_NAMES.get(kind_code, str(kind_code)),
        "dims": dims,
        "frames": frames,
        "rate": rate,
        "window_seconds": window,
        "hop_seconds": hop,
    }
    return data.copy(), header
