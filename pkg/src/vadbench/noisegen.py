"""Procedural noise synthesis: speech-shaped noise, babble, and split assembly.

Speech-shaped noise (SSN) is white Gaussian noise colored by a 12th-order LPC
envelope fitted to a clean speech recording. Babble sums six energy-normalized
streams of silence-stripped speech. Recorded noise types are assembled from
supplied clips. All synthesis is seeded and reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import signal as sps

from .corpus import FrameParams, Utterance, derive_seed

DEFAULT_LPC_ORDER = 12
DEFAULT_NOISE_RMS = 0.1


def rms(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.square(x))))


# ---------------------------------------------------------------------------
# LPC fitting and speech-shaped noise
# ---------------------------------------------------------------------------

def averaged_autocorrelation(samples: np.ndarray, order: int, rate: int,
                             frame_seconds: float = 0.030) -> np.ndarray:
    """Biased autocorrelation r[0..order], averaged over Hamming frames."""
    samples = np.asarray(samples, dtype=np.float64)
    frame_len = int(round(frame_seconds * rate))
    hop = frame_len // 2
    if len(samples) < frame_len:
        raise ValueError("signal shorter than one autocorrelation frame")
    count = 1 + (len(samples) - frame_len) // hop
    window = np.hamming(frame_len)
    starts = np.arange(count) * hop
    frames = samples[starts[:, None] + np.arange(frame_len)] * window
    nfft = 1
    while nfft < 2 * frame_len:
        nfft *= 2
    spectra = np.abs(np.fft.rfft(frames, nfft, axis=1)) ** 2
    acorr = np.fft.irfft(spectra, nfft, axis=1)[:, :order + 1]
    return acorr.mean(axis=0) / frame_len


def levinson(r: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Levinson-Durbin on r[0..p]: returns (a[1..p], reflection k[1..p], error).

    A(z) = 1 + sum_k a[k] z^-k is the prediction-error filter.
    """
    r = np.asarray(r, dtype=np.float64)
    order = len(r) - 1
    if r[0] <= 0.0:
        raise ValueError("autocorrelation has non-positive energy")
    a = np.zeros(order)
    k = np.zeros(order)
    err = float(r[0])
    for i in range(order):
        acc = r[i + 1] + np.dot(a[:i], r[i:0:-1])
        k_i = -acc / err
        k[i] = k_i
        a[:i] += k_i * a[i - 1::-1] if i else 0.0
        a[i] = k_i
        err *= 1.0 - k_i * k_i
        if err <= 0.0:
            raise ValueError("Levinson recursion collapsed (degenerate signal)")
    return a, k, err


@dataclass(frozen=True)
class LpcFilter:
    """All-pole shaping filter gain / A(z), with A(z) = 1 + sum a_k z^-k."""

    coeffs: np.ndarray      # a[1..p]
    gain: float
    reflection: np.ndarray  # k[1..p], all |k| < 1 for a stable fit

    @property
    def order(self) -> int:
        return len(self.coeffs)

    @property
    def denominator(self) -> np.ndarray:
        return np.concatenate([[1.0], self.coeffs])

    def to_dict(self) -> dict:
        return {
            "coeffs": [float(v) for v in self.coeffs],
            "gain": float(self.gain),
            "reflection": [float(v) for v in self.reflection],
        }

    @classmethod
    def from_dict(cls, row: dict) -> "LpcFilter":
        return cls(coeffs=np.asarray(row["coeffs"], dtype=np.float64),
                   gain=float(row["gain"]),
                   reflection=np.asarray(row["reflection"], dtype=np.float64))


def lpc_fit(samples: np.ndarray, rate: int, order: int = DEFAULT_LPC_ORDER) -> LpcFilter:
    """Fit a stable all-pole envelope to a speech recording.

    Gain is set so the filter's white-noise response matches the input power:
    for an AR fit with reflection coefficients k_i, driving 1/A(z) with noise
    of variance P_in * prod(1 - k_i^2) yields output variance P_in.
    """
    samples = np.asarray(samples, dtype=np.float64)
    r = averaged_autocorrelation(samples, order, rate)
    a, k, _ = levinson(r)
    if np.any(np.abs(k) >= 1.0):
        bad = [i + 1 for i, v in enumerate(k) if abs(v) >= 1.0]
        raise ValueError(f"unstable LPC fit: |reflection| >= 1 at stage(s) {bad}")
    power_in = float(np.mean(np.square(samples)))
    gain = float(np.sqrt(power_in * np.prod(1.0 - k * k)))
    return LpcFilter(coeffs=a, gain=gain, reflection=k)


def synth_ssn(filt: LpcFilter, num_samples: int, seed: int,
              target_rms: float = DEFAULT_NOISE_RMS) -> np.ndarray:
    """Seeded white Gaussian noise through gain / A(z), RMS-normalized."""
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(num_samples)
    shaped = sps.lfilter([filt.gain], filt.denominator, white)
    level = rms(shaped)
    if level == 0.0:
        raise ValueError("synthesized noise has zero energy")
    return shaped * (target_rms / level)


def lpc_envelope_psd(filt: LpcFilter, freqs: np.ndarray, rate: int) -> np.ndarray:
    """One-sided model PSD density gain^2/|A|^2 * 2/fs at the given frequencies."""
    _, response = sps.freqz([filt.gain], filt.denominator, worN=freqs, fs=rate)
    return (np.abs(response) ** 2) * 2.0 / rate


def spectral_match_db(audio: np.ndarray, filt: LpcFilter, rate: int,
                      band: tuple[float, float] = (50.0, 7000.0)) -> float:
    """Mean log-spectral distance (dB) between measured PSD and the LPC envelope.

    Levels are aligned on mean in-band power first, so this measures spectral
    shape, independent of any overall RMS normalization.
    """
    freqs, pxx = sps.welch(np.asarray(audio, dtype=np.float64), fs=rate,
                           nperseg=1024, noverlap=512)
    keep = (freqs >= band[0]) & (freqs <= band[1])
    freqs, pxx = freqs[keep], pxx[keep]
    model = lpc_envelope_psd(filt, freqs, rate)
    model = model * (np.mean(pxx) / np.mean(model))
    return float(np.mean(np.abs(10.0 * np.log10(pxx / model))))


# ---------------------------------------------------------------------------
# Energy VAD (silence stripping and recording quality checks)
# ---------------------------------------------------------------------------

def _runs(mask: np.ndarray) -> list[tuple[int, int, bool]]:
    """Contiguous runs of a boolean mask as (start, end, value)."""
    runs = []
    start = 0
    for i in range(1, len(mask) + 1):
        if i == len(mask) or mask[i] != mask[start]:
            runs.append((start, i, bool(mask[start])))
            start = i
    return runs


def energy_vad(samples: np.ndarray, params: FrameParams | None = None,
               margin_db: float = 6.0, percentile: float = 20.0,
               min_gap_seconds: float = 0.100, min_run_seconds: float = 0.050,
               silence_floor_db: float = -60.0) -> np.ndarray:
    """Frame labels from log energy: threshold at (20th percentile + 6 dB).

    Frames above the threshold are speech; gaps shorter than 100 ms between
    speech runs are closed, then speech runs shorter than 50 ms are dropped.
    When no frame clears the relative threshold (flat dynamics), frames are
    classified by absolute level against `silence_floor_db` instead, so a
    constant-amplitude signal is all speech and near-digital silence is not.
    """
    params = params or FrameParams()
    samples = np.asarray(samples, dtype=np.float64)
    count = params.num_frames(len(samples))
    if count == 0:
        return np.zeros(0, dtype=np.uint8)
    starts = np.arange(count) * params.hop_samples
    frames = samples[starts[:, None] + np.arange(params.window_samples)]
    energy_db = 10.0 * np.log10(np.maximum(np.mean(np.square(frames), axis=1), 1e-12))

    threshold = np.percentile(energy_db, percentile) + margin_db
    speech = energy_db > threshold
    if not np.any(speech):
        speech = energy_db > silence_floor_db

    gap_frames = int(round(min_gap_seconds / params.hop_seconds))
    run_frames = int(round(min_run_seconds / params.hop_seconds))

    runs = _runs(speech)
    for index, (start, end, value) in enumerate(runs):
        interior = 0 < index < len(runs) - 1
        if not value and interior and end - start < gap_frames:
            speech[start:end] = True
    for start, end, value in _runs(speech):
        if value and end - start < run_frames:
            speech[start:end] = False
    return speech.astype(np.uint8)


def frame_powers(samples: np.ndarray, params: FrameParams | None = None) -> np.ndarray:
    params = params or FrameParams()
    samples = np.asarray(samples, dtype=np.float64)
    count = params.num_frames(len(samples))
    starts = np.arange(count) * params.hop_samples
    frames = samples[starts[:, None] + np.arange(params.window_samples)]
    return np.mean(np.square(frames), axis=1)


def est_snr(samples: np.ndarray, labels: np.ndarray,
            params: FrameParams | None = None) -> float:
    """SNR estimate: mean speech-frame power over mean nonspeech-frame power."""
    labels = np.asarray(labels).astype(bool)
    powers = frame_powers(samples, params)
    if len(powers) != len(labels):
        raise ValueError("label length does not match frame count")
    if not labels.any() or labels.all():
        raise ValueError("SNR estimate requires both speech and nonspeech frames")
    noise = float(np.mean(powers[~labels]))
    speech = float(np.mean(powers[labels]))
    return 10.0 * np.log10(max(speech, 1e-30) / max(noise, 1e-30))


# ---------------------------------------------------------------------------
# Speaker screening for noise-source corpora
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionCriteria:
    """Recording-quality gate for noise-source speakers."""

    min_snr_db: float = 15.0
    min_speech_fraction: float = 0.90
    min_speech_seconds: float = 600.0


@dataclass
class SpeakerStats:
    speaker: str
    snr_db: float
    speech_fraction: float
    speech_seconds: float
    total_seconds: float
    accepted: bool

    def to_dict(self) -> dict:
        return {
            "speaker": self.speaker,
            "snr_db": round(self.snr_db, 4),
            "speech_fraction": round(self.speech_fraction, 6),
            "speech_seconds": round(self.speech_seconds, 3),
            "total_seconds": round(self.total_seconds, 3),
            "accepted": self.accepted,
        }


def select_speakers(per_speaker: Mapping[str, Sequence[Utterance]],
                    criteria: SelectionCriteria | None = None,
                    params: FrameParams | None = None
                    ) -> tuple[list[str], dict[str, SpeakerStats]]:
    """Screen speakers by estimated SNR, speech fraction, and speech time.

    Returns accepted speaker ids (sorted) and per-speaker stats. Deterministic
    given the same input corpus.
    """
    criteria = criteria or SelectionCriteria()
    params = params or FrameParams()
    stats: dict[str, SpeakerStats] = {}
    accepted = []
    for speaker in sorted(per_speaker):
        powers_all: list[np.ndarray] = []
        labels_all: list[np.ndarray] = []
        for utt in per_speaker[speaker]:
            labels = energy_vad(utt.samples, params)
            powers_all.append(frame_powers(utt.samples, params))
            labels_all.append(labels)
        powers = np.concatenate(powers_all) if powers_all else np.zeros(0)
        labels = np.concatenate(labels_all).astype(bool) if labels_all else np.zeros(0, bool)
        total_seconds = len(labels) * params.hop_seconds
        speech_seconds = float(np.sum(labels)) * params.hop_seconds
        fraction = speech_seconds / total_seconds if total_seconds else 0.0
        if labels.any() and not labels.all():
            snr = float(10.0 * np.log10(max(float(np.mean(powers[labels])), 1e-30)
                                        / max(float(np.mean(powers[~labels])), 1e-30)))
        elif labels.any():
            snr = float("inf")  # no nonspeech frames to measure a floor from
        else:
            snr = float("-inf")
        ok = bool(snr > criteria.min_snr_db
                  and fraction > criteria.min_speech_fraction
                  and speech_seconds > criteria.min_speech_seconds)
        stats[speaker] = SpeakerStats(speaker, snr, fraction, speech_seconds,
                                      total_seconds, ok)
        if ok:
            accepted.append(speaker)
    return accepted, stats


def fit_speaker_filters(per_speaker: Mapping[str, Sequence[Utterance]],
                        speakers: Sequence[str], rate: int,
                        order: int = DEFAULT_LPC_ORDER) -> list[tuple[str, LpcFilter]]:
    """One LPC envelope per selected speaker, fitted to their pooled audio."""
    filters = []
    for speaker in speakers:
        pooled = np.concatenate([u.samples for u in per_speaker[speaker]])
        filters.append((speaker, lpc_fit(pooled, rate, order)))
    return filters


# ---------------------------------------------------------------------------
# Babble
# ---------------------------------------------------------------------------

def strip_silence(samples: np.ndarray, params: FrameParams | None = None) -> np.ndarray:
    """Keep only the speech-frame spans found by the energy VAD."""
    params = params or FrameParams()
    labels = energy_vad(samples, params)
    spans = []
    run_start = None
    for index in range(len(labels) + 1):
        in_speech = index < len(labels) and labels[index]
        if in_speech and run_start is None:
            run_start = index
        elif not in_speech and run_start is not None:
            first = run_start * params.hop_samples
            last = (index - 1) * params.hop_samples + params.window_samples
            spans.append(samples[first:min(last, len(samples))])
            run_start = None
    if not spans:
        return np.zeros(0, dtype=np.float64)
    return np.concatenate(spans)


def build_babble(per_speaker: Mapping[str, Sequence[np.ndarray]],
                 num_streams: int = 6,
                 stream_map: Mapping[str, int] | None = None,
                 target_rms: float = DEFAULT_NOISE_RMS,
                 params: FrameParams | None = None) -> np.ndarray:
    """Sum `num_streams` unit-RMS streams of silence-stripped speech.

    Each speaker feeds exactly one stream (round-robin over sorted speakers
    unless `stream_map` pins the assignment). Streams are truncated to the
    shortest before summing; the sum is normalized to `target_rms`.
    """
    speakers = sorted(per_speaker)
    if len(speakers) < num_streams:
        raise ValueError(
            f"babble needs at least {num_streams} speakers, got {len(speakers)}")
    if stream_map is None:
        stream_map = {spk: i % num_streams for i, spk in enumerate(speakers)}
    else:
        bad = {spk: s for spk, s in stream_map.items() if not 0 <= s < num_streams}
        if bad:
            raise ValueError(f"stream indices out of range: {bad}")

    streams: list[list[np.ndarray]] = [[] for _ in range(num_streams)]
    for speaker in speakers:
        stream = stream_map[speaker]
        for clip in per_speaker[speaker]:
            stripped = strip_silence(np.asarray(clip, dtype=np.float64), params)
            if len(stripped):
                streams[stream].append(stripped)

    joined = []
    for index, pieces in enumerate(streams):
        if not pieces:
            raise ValueError(f"babble stream {index} has no speech audio")
        stream_audio = np.concatenate(pieces)
        joined.append(stream_audio / rms(stream_audio))
    length = min(len(s) for s in joined)
    if length == 0:
        raise ValueError("babble streams are empty after silence stripping")
    mixture = np.sum([s[:length] for s in joined], axis=0)
    return mixture * (target_rms / rms(mixture))


# ---------------------------------------------------------------------------
# Split assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    """How many sources feed each split, and how long each contributes."""

    train_sources: int = 18
    train_seconds_per_source: float = 200.0
    val_sources: int = 2
    val_seconds_per_source: float = 300.0
    test_sources: int = 2
    test_seconds_per_source: float = 300.0

    @property
    def total_sources(self) -> int:
        return self.train_sources + self.val_sources + self.test_sources

    def split_slices(self) -> list[tuple[str, slice, float]]:
        a = self.train_sources
        b = a + self.val_sources
        c = b + self.test_sources
        return [
            ("train", slice(0, a), self.train_seconds_per_source),
            ("val", slice(a, b), self.val_seconds_per_source),
            ("test", slice(b, c), self.test_seconds_per_source),
        ]


def assemble_ssn(filters: Sequence[tuple[str, LpcFilter]], plan: SplitPlan,
                 rate: int, master_seed: int,
                 target_rms: float = DEFAULT_NOISE_RMS
                 ) -> dict[str, tuple[np.ndarray, dict]]:
    """Per-split SSN: disjoint source filters, fixed seconds per source."""
    if len(filters) < plan.total_sources:
        raise ValueError(
            f"split plan needs {plan.total_sources} source filters, "
            f"got {len(filters)} (short by {plan.total_sources - len(filters)})")
    out: dict[str, tuple[np.ndarray, dict]] = {}
    for split, span, seconds in plan.split_slices():
        pieces = []
        sources = []
        for speaker, filt in filters[span]:
            seed = derive_seed(master_seed, f"ssn/{split}/{speaker}")
            pieces.append(synth_ssn(filt, int(round(seconds * rate)), seed, target_rms))
            sources.append(speaker)
        audio = np.concatenate(pieces)
        provenance = {
            "noise_type": "SSN",
            "split": split,
            "sources": sources,
            "seconds_per_source": seconds,
            "rate": rate,
            "master_seed": master_seed,
        }
        out[split] = (audio, provenance)
    return out


def assemble_recorded(clips: Sequence[np.ndarray], seconds: float, rate: int) -> np.ndarray:
    """Concatenate recorded clips and trim to the requested duration."""
    want = int(round(seconds * rate))
    if not clips:
        raise ValueError("no source clips supplied")
    joined = np.concatenate([np.asarray(c, dtype=np.float64) for c in clips])
    if len(joined) < want:
        short = (want - len(joined)) / rate
        raise ValueError(f"source clips too short for plan: {short:.1f} s missing")
    return joined[:want]
