"""SNR-controlled mixing of clean speech with noise, and dataset generation.

SNR is speech-active: signal power is measured only over samples covered by
speech-labeled frames, noise power over the entire noise slice. Noise slices
are drawn at a seeded random offset and tiled cyclically. If the mixture peak
exceeds full scale the whole mixture is attenuated, which preserves the SNR.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .audio_io import write_wav
from .corpus import (FrameParams, ManifestEntry, Utterance, derive_seed,
                     format_snr, mixture_id, write_labels)


def speech_sample_mask(labels: np.ndarray, num_samples: int,
                       params: FrameParams | None = None) -> np.ndarray:
    """Bool mask of samples covered by at least one speech-labeled frame."""
    params = params or FrameParams()
    labels = np.asarray(labels)
    delta = np.zeros(num_samples + 1, dtype=np.int64)
    for index in np.nonzero(labels)[0]:
        start, end = params.frame_span(int(index))
        if start >= num_samples:
            continue
        delta[start] += 1
        delta[min(end, num_samples)] -= 1
    return np.cumsum(delta[:-1]) > 0


def active_snr(speech: np.ndarray, labels: np.ndarray, noise: np.ndarray,
               params: FrameParams | None = None) -> float:
    """Speech-active SNR in dB of a (speech, noise) component pair."""
    speech = np.asarray(speech, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    mask = speech_sample_mask(labels, len(speech), params)
    if not mask.any():
        raise ValueError("no speech-labeled frames; active SNR undefined")
    if len(noise) == 0:
        raise ValueError("empty noise signal")
    p_active = float(np.mean(np.square(speech[mask])))
    p_noise = float(np.mean(np.square(noise)))
    if p_noise <= 0.0 or p_active <= 0.0:
        raise ValueError("zero-power component; active SNR undefined")
    return 10.0 * np.log10(p_active / p_noise)


def draw_offset(seed: int, noise_length: int) -> int:
    """First random draw of an entry's RNG: the noise start offset."""
    rng = np.random.default_rng(seed)
    return int(rng.integers(0, noise_length))


def tile_noise(noise: np.ndarray, offset: int, count: int) -> np.ndarray:
    """Cyclic slice of `count` samples starting at `offset`."""
    idx = (offset + np.arange(count)) % len(noise)
    return np.asarray(noise, dtype=np.float64)[idx]


@dataclass
class MixResult:
    audio: np.ndarray
    achieved_snr_db: float
    noise_scale: float
    noise_offset: int
    peak_after_mix: float
    clipped: bool


def mix_at_snr(speech: np.ndarray, labels: np.ndarray, noise: np.ndarray,
               target_snr_db: float, seed: int,
               params: FrameParams | None = None) -> MixResult:
    """Mix speech with a seeded noise slice at a speech-active target SNR.

    The noise is scaled so that active-speech power over full-slice noise
    power hits the target. A peak above full scale attenuates the whole
    mixture (SNR unchanged); nothing is ever hard-clipped.
    """
    speech = np.asarray(speech, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if len(noise) == 0:
        raise ValueError("empty noise signal")
    offset = draw_offset(seed, len(noise))
    slice_ = tile_noise(noise, offset, len(speech))

    mask = speech_sample_mask(labels, len(speech), params)
    if not mask.any():
        raise ValueError("no speech-labeled frames; cannot set active SNR")
    p_active = float(np.mean(np.square(speech[mask])))
    p_noise = float(np.mean(np.square(slice_)))
    if p_active <= 0.0 or p_noise <= 0.0:
        raise ValueError("zero-power component; cannot set active SNR")

    scale = float(np.sqrt(p_active / (p_noise * 10.0 ** (target_snr_db / 10.0))))
    mixture = speech + scale * slice_
    peak = float(np.max(np.abs(mixture))) if len(mixture) else 0.0
    if peak > 1.0:
        mixture = mixture / peak
    achieved = 10.0 * np.log10(p_active / (scale * scale * p_noise))
    return MixResult(audio=mixture, achieved_snr_db=achieved, noise_scale=scale,
                     noise_offset=offset, peak_after_mix=peak, clipped=False)


def reconstruct_noise_component(entry: ManifestEntry, noise: np.ndarray,
                                num_samples: int, noise_scale: float,
                                peak_after_mix: float) -> np.ndarray:
    """Rebuild the exact noise signal inside a written mixture."""
    attenuation = 1.0 / peak_after_mix if peak_after_mix > 1.0 else 1.0
    return tile_noise(noise, entry.noise_offset, num_samples) * noise_scale * attenuation


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------

@dataclass
class CleanItem:
    utterance: Utterance
    labels: np.ndarray
    split: str


def generate_dataset(clean_items: Sequence[CleanItem],
                     noises: Mapping[tuple[str, str], np.ndarray],
                     noise_types: Sequence[str],
                     snr_levels_db: Sequence[float],
                     out_dir: str | Path,
                     master_seed: int,
                     workers: int = 1,
                     resume: bool = False,
                     params: FrameParams | None = None,
                     log: Callable[[dict], None] | None = None
                     ) -> list[ManifestEntry]:
    """Mix every clean utterance with every (noise type, SNR) condition.

    Output layout: <out>/<split>/<noise>/<snr>/<clean_id>.wav plus a matching
    .lab label file. Each entry's randomness comes only from a seed derived
    from (master_seed, entry id), so results are bit-identical for any worker
    count or completion order. Returns manifest entries in sorted order.
    """
    params = params or FrameParams()
    out_dir = Path(out_dir)

    splits = sorted({item.split for item in clean_items})
    missing = [(noise, split) for noise in noise_types for split in splits
               if (noise, split) not in noises]
    if missing:
        raise ValueError(f"missing noise signals for (type, split): {missing}")

    tasks = []
    for item in clean_items:
        for noise_type in noise_types:
            for snr in snr_levels_db:
                entry_id = mixture_id(item.split, noise_type, snr, item.utterance.utterance_id)
                tasks.append((item, noise_type, float(snr), entry_id))
    tasks.sort(key=lambda t: t[3])

    def run_one(task) -> ManifestEntry:
        item, noise_type, snr, entry_id = task
        seed = derive_seed(master_seed, entry_id)
        wav_path = out_dir / f"{entry_id}.wav"
        lab_path = out_dir / f"{entry_id}.lab"
        noise = noises[(noise_type, item.split)]
        started = time.monotonic()
        if resume and wav_path.exists() and lab_path.exists():
            offset = draw_offset(seed, len(noise))
            status = "skipped"
        else:
            result = mix_at_snr(item.utterance.samples, item.labels, noise,
                                snr, seed, params)
            write_wav(wav_path, result.audio, item.utterance.rate)
            write_labels(lab_path, [(entry_id, item.labels)])
            offset = result.noise_offset
            status = "mixed"
        if log is not None:
            log({"event": "mix", "id": entry_id, "status": status,
                 "seconds": round(time.monotonic() - started, 4)})
        return ManifestEntry(
            clean_id=item.utterance.utterance_id,
            noise_type=noise_type,
            snr_db=snr,
            split=item.split,
            noise_offset=offset,
            seed=seed,
            output_path=str(wav_path),
            label_path=str(lab_path),
        )

    if workers <= 1:
        entries = [run_one(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(run_one, tasks))
    entries.sort(key=lambda e: e.mixture_id)
    return entries


def subsample(entries: Sequence[ManifestEntry], stride: int) -> list[ManifestEntry]:
    """Keep every stride-th clean file (sorted by id, anchored at index 0).

    All mixtures of a kept clean file are kept, so conditions stay balanced.
    Composing stride-a then stride-b selections equals stride-(a*b) directly.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if stride == 1:
        return list(entries)
    clean_ids = sorted({entry.clean_id for entry in entries})
    kept = set(clean_ids[::stride])
    return [entry for entry in entries if entry.clean_id in kept]
