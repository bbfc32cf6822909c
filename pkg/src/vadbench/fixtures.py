"""Bundled fixture corpus: small synthetic utterances with exact alignments.

No recorded speech ships with this package; instead the fixture generator
synthesizes speech-like audio (glottal pulse trains through per-speaker
formant filters, with silence gaps and room tone) whose word intervals are
known exactly by construction. It also emits a larger-voice noise-source
corpus for SSN/babble building and procedurally colored "recorded" noise
clips for the remaining noise types. Everything is seeded.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .audio_io import write_wav
from .corpus import SAMPLE_RATE, derive_seed, write_jsonl
from .labeling import AlignmentTrack, write_alignments

ROOM_TONE_RMS = 1e-3

RECORDED_TYPES = ("Nature", "Office", "Public", "Street", "Transport", "City", "Domestic")

# (speaker id, utterance count, split); 13/4/3 over five voices
CLEAN_PLAN = (
    ("s01", 5, "train"),
    ("s02", 4, "train"),
    ("s03", 4, "train"),
    ("s04", 4, "val"),
    ("s05", 3, "test"),
)

NOISESRC_SPEAKERS = tuple(f"n{i:02d}" for i in range(1, 9))
NOISESRC_UTTS_PER_SPEAKER = 6
# utterances 0..3 feed train babble, 4 val, 5 test
NOISESRC_SPLIT_OF_UTT = ("train", "train", "train", "train", "val", "test")

_BASE_F0 = {"s01": 105.0, "s02": 130.0, "s03": 160.0, "s04": 190.0, "s05": 220.0}


def _speaker_f0(speaker: str, rng: np.random.Generator) -> float:
    if speaker in _BASE_F0:
        return _BASE_F0[speaker]
    return float(rng.uniform(95.0, 235.0))


def _formant_filter(rng: np.random.Generator, rate: int) -> np.ndarray:
    """All-pole vocal-tract-like filter from three jittered formants."""
    bases = ((700.0, 90.0), (1250.0, 110.0), (2600.0, 170.0))
    poles = []
    for freq, bandwidth in bases:
        f = freq * rng.uniform(0.85, 1.15)
        bw = bandwidth * rng.uniform(0.8, 1.3)
        radius = np.exp(-np.pi * bw / rate)
        theta = 2.0 * np.pi * f / rate
        poles.append(radius * np.exp(1j * theta))
        poles.append(radius * np.exp(-1j * theta))
    return np.real(np.poly(poles))


def _room_tone(rng: np.random.Generator, count: int, rate: int) -> np.ndarray:
    white = rng.standard_normal(count)
    b, a = sps.butter(2, 2000.0 / (rate / 2.0), btype="low")
    toned = sps.lfilter(b, a, white)
    return toned * (ROOM_TONE_RMS / np.sqrt(np.mean(np.square(toned)) + 1e-30))


def _voiced_burst(rng: np.random.Generator, count: int, f0: float,
                  vocal_tract: np.ndarray, rate: int,
                  level_range: tuple[float, float] = (0.2, 0.32),
                  normalize: str = "peak") -> np.ndarray:
    """One word: jittered pulse train + aspiration through the formant filter.

    `normalize="peak"` scales the burst peak into `level_range` (natural
    word-to-word loudness spread); `"rms"` pins the burst RMS instead, which
    keeps the frame-energy band tight across words.
    """
    excitation = np.zeros(count)
    period = rate / f0
    position = 0.0
    while position < count:
        excitation[int(position)] = 1.0
        position += period * rng.uniform(0.97, 1.03)
    excitation += 0.02 * rng.standard_normal(count)
    voice = sps.lfilter([1.0], vocal_tract, excitation)
    ramp = min(int(0.030 * rate), count // 2)
    envelope = np.ones(count)
    envelope[:ramp] = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
    envelope[count - ramp:] = envelope[:ramp][::-1]
    voice = voice * envelope
    level = rng.uniform(*level_range)
    if normalize == "rms":
        reference = np.sqrt(np.mean(np.square(voice))) + 1e-30
    else:
        reference = np.max(np.abs(voice)) + 1e-30
    return voice * (level / reference)


def synth_utterance(seed: int, rate: int = SAMPLE_RATE,
                    num_words: tuple[int, int] = (2, 5),
                    word_seconds: tuple[float, float] = (0.20, 0.60),
                    gap_seconds: tuple[float, float] = (0.12, 0.35),
                    edge_seconds: tuple[float, float] = (0.15, 0.40),
                    f0: float | None = None,
                    level_range: tuple[float, float] = (0.2, 0.32),
                    normalize: str = "peak",
                    room_tone_rms: float = ROOM_TONE_RMS
                    ) -> tuple[np.ndarray, list[tuple[float, float]]]:
    """Synthesize one utterance; returns (samples, word intervals in seconds)."""
    rng = np.random.default_rng(seed)
    vocal_tract = _formant_filter(rng, rate)
    f0 = f0 if f0 is not None else float(rng.uniform(95.0, 235.0))

    pieces = []
    words: list[tuple[float, float]] = []
    cursor = 0

    def add_silence(seconds: float) -> None:
        nonlocal cursor
        count = int(round(seconds * rate))
        pieces.append(np.zeros(count))
        cursor += count

    add_silence(rng.uniform(*edge_seconds))
    for index in range(int(rng.integers(num_words[0], num_words[1] + 1))):
        if index:
            add_silence(rng.uniform(*gap_seconds))
        count = int(round(rng.uniform(*word_seconds) * rate))
        burst = _voiced_burst(rng, count, f0 * rng.uniform(0.92, 1.08), vocal_tract,
                              rate, level_range, normalize)
        words.append((cursor / rate, (cursor + count) / rate))
        pieces.append(burst)
        cursor += count
    add_silence(rng.uniform(*edge_seconds))

    samples = np.concatenate(pieces)
    samples = samples + _room_tone(rng, len(samples), rate) * (room_tone_rms / ROOM_TONE_RMS)
    return samples, words


def _colored_noise(rng: np.random.Generator, count: int, rate: int,
                   noise_type: str) -> np.ndarray:
    """Distinct procedural texture per recorded noise type, RMS 0.1."""
    white = rng.standard_normal(count)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(count, 1.0 / rate)
    safe = np.maximum(freqs, 1.0)

    tilt = {"Nature": -0.5, "Office": -0.7, "Public": -1.0, "Street": -1.0,
            "Transport": -1.3, "City": -0.6, "Domestic": -0.8}[noise_type]
    shaped = np.fft.irfft(spectrum * safe ** tilt, count)

    t = np.arange(count) / rate
    if noise_type == "Office":
        hum = sum(np.sin(2 * np.pi * h * t + rng.uniform(0, 2 * np.pi))
                  for h in (60.0, 120.0, 180.0))
        shaped += 0.2 * np.std(shaped) * hum
    if noise_type in ("Street", "Transport"):
        engine = np.sin(2 * np.pi * rng.uniform(70.0, 110.0) * t + rng.uniform(0, 2 * np.pi))
        shaped += 0.5 * np.std(shaped) * engine
    if noise_type in ("Nature", "City", "Public"):
        am_rate = rng.uniform(0.2, 1.5)
        shaped *= 1.0 + 0.4 * np.sin(2 * np.pi * am_rate * t + rng.uniform(0, 2 * np.pi))
    if noise_type == "Domestic":
        # sparse impulsive events (cutlery, door thumps)
        for _ in range(max(1, count // (rate * 2))):
            at = int(rng.integers(0, max(count - rate // 10, 1)))
            length = int(0.05 * rate)
            shaped[at:at + length] += (4.0 * np.std(shaped)
                                       * np.exp(-np.arange(length) / (0.01 * rate))
                                       * rng.standard_normal(length))

    return shaped * (0.1 / np.sqrt(np.mean(np.square(shaped)) + 1e-30))


@dataclass
class FixtureSummary:
    clean_dir: str
    noisesrc_dir: str
    noiseclips_dir: str
    num_clean: int
    num_noisesrc: int
    clean_seconds: float


def build_fixture_corpus(out_dir: str | Path, master_seed: int = 20240601,
                         rate: int = SAMPLE_RATE) -> FixtureSummary:
    """Generate the full fixture tree under `out_dir` (seeded, reproducible).

    Layout:
      clean/<id>.wav + clean/alignments.jsonl + clean/manifest.jsonl
      noisesrc/<id>.wav + noisesrc/manifest.jsonl
      noiseclips/<Type>/<split>/clip<NN>.wav
    """
    out_dir = Path(out_dir)
    clean_dir = out_dir / "clean"
    noisesrc_dir = out_dir / "noisesrc"
    clips_dir = out_dir / "noiseclips"

    # clean corpus with exact alignments
    tracks = []
    manifest_rows = []
    clean_seconds = 0.0
    for speaker, count, split in CLEAN_PLAN:
        for index in range(count):
            utterance_id = f"{speaker}-{index:03d}"
            seed = derive_seed(master_seed, f"fixture/clean/{utterance_id}")
            rng = np.random.default_rng(seed)
            samples, words = synth_utterance(
                seed=int(rng.integers(2 ** 63)), rate=rate,
                f0=_speaker_f0(speaker, rng) * rng.uniform(0.97, 1.03))
            path = clean_dir / f"{utterance_id}.wav"
            write_wav(path, samples, rate)
            duration = len(samples) / rate
            clean_seconds += duration
            tracks.append(AlignmentTrack(utterance_id=utterance_id, words=words,
                                         duration=duration))
            # manifest paths are relative to the manifest file, so the corpus
            # directory can be moved or bundled wholesale
            manifest_rows.append({"id": utterance_id, "path": path.name,
                                  "split": split, "duration": round(duration, 6)})
    write_alignments(clean_dir / "alignments.jsonl", tracks)
    write_jsonl(clean_dir / "manifest.jsonl", manifest_rows)

    # noise-source corpus: longer, denser utterances for SSN/babble building
    src_rows = []
    for speaker in NOISESRC_SPEAKERS:
        for index in range(NOISESRC_UTTS_PER_SPEAKER):
            utterance_id = f"{speaker}-{index:03d}"
            seed = derive_seed(master_seed, f"fixture/noisesrc/{utterance_id}")
            rng = np.random.default_rng(seed)
            # dense monologue with a tight level band and a very low floor, so
            # energy screening separates speech from room tone decisively
            samples, _ = synth_utterance(
                seed=int(rng.integers(2 ** 63)), rate=rate,
                num_words=(6, 9), word_seconds=(0.6, 1.2),
                gap_seconds=(0.06, 0.10), edge_seconds=(0.05, 0.10),
                f0=_speaker_f0(speaker, rng),
                level_range=(0.11, 0.13), normalize="rms",
                room_tone_rms=1e-4)
            path = noisesrc_dir / f"{utterance_id}.wav"
            write_wav(path, samples, rate)
            src_rows.append({"id": utterance_id, "path": path.name,
                             "speaker": speaker,
                             "split": NOISESRC_SPLIT_OF_UTT[index],
                             "duration": round(len(samples) / rate, 6)})
    write_jsonl(noisesrc_dir / "manifest.jsonl", src_rows)

    # recorded-noise clips: a few per (type, split)
    clip_seconds = {"train": 35.0, "val": 12.0, "test": 12.0}
    for noise_type in RECORDED_TYPES:
        for split in ("train", "val", "test"):
            for clip_index in range(3):
                seed = derive_seed(
                    master_seed, f"fixture/noise/{noise_type}/{split}/{clip_index}")
                rng = np.random.default_rng(seed)
                count = int(clip_seconds[split] * rate)
                clip = _colored_noise(rng, count, rate, noise_type)
                write_wav(clips_dir / noise_type / split / f"clip{clip_index:02d}.wav",
                          clip, rate)

    return FixtureSummary(
        clean_dir=str(clean_dir),
        noisesrc_dir=str(noisesrc_dir),
        noiseclips_dir=str(clips_dir),
        num_clean=len(manifest_rows),
        num_noisesrc=len(src_rows),
        clean_seconds=round(clean_seconds, 3),
    )
