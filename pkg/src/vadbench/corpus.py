"""Shared dataset model: frame geometry, deterministic seeding, manifests, label files.

Everything downstream (labeling, mixing, features, scoring) agrees on one frame
grid and one seeding scheme, both defined here.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

SAMPLE_RATE = 16000
WINDOW_SECONDS = 0.025
HOP_SECONDS = 0.010

# Canonical condition grid. "Seen" types also occur in training mixtures of a
# typical protocol; the distinction only affects report column ordering here.
NOISE_TYPES_SEEN = ("Nature", "Office", "Public", "Street", "Transport", "City")
NOISE_TYPES_UNSEEN = ("Babble", "SSN", "Domestic")
NOISE_TYPES = NOISE_TYPES_SEEN + NOISE_TYPES_UNSEEN
SNR_LEVELS_DB = (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class FrameParams:
    """Analysis frame geometry. Defaults: 25 ms window, 10 ms hop at 16 kHz."""

    rate: int = SAMPLE_RATE
    window_seconds: float = WINDOW_SECONDS
    hop_seconds: float = HOP_SECONDS

    @property
    def window_samples(self) -> int:
        return int(round(self.window_seconds * self.rate))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_seconds * self.rate))

    def num_frames(self, num_samples: int) -> int:
        """Frame count without padding; signals shorter than one window have 0."""
        if num_samples < self.window_samples:
            return 0
        return 1 + (num_samples - self.window_samples) // self.hop_samples

    def frame_center(self, index: int) -> float:
        """Center time (seconds) of frame `index`."""
        return index * self.hop_seconds + self.window_seconds / 2.0

    def frame_span(self, index: int) -> tuple[int, int]:
        """Sample span [start, end) covered by frame `index`."""
        start = index * self.hop_samples
        return start, start + self.window_samples


def derive_seed(master_seed: int, entry_id: str) -> int:
    """Stable 64-bit seed for one work item.

    Keyed hash of the entry id, so outputs depend only on (master_seed,
    entry_id) and never on scheduling order or worker count.
    """
    key = int(master_seed).to_bytes(8, "little", signed=False)
    digest = hashlib.blake2b(entry_id.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


@dataclass
class Utterance:
    """One audio signal with its id. Samples are float64 in [-1, 1]."""

    utterance_id: str
    samples: np.ndarray
    rate: int = SAMPLE_RATE

    @property
    def num_samples(self) -> int:
        return int(len(self.samples))

    @property
    def duration(self) -> float:
        return self.num_samples / self.rate

    @property
    def speaker(self) -> str:
        return self.utterance_id.split("-")[0]


@dataclass
class SsrStats:
    """Corpus-level speech/silence bookkeeping measured on frame labels."""

    speech_seconds: float
    silence_seconds: float

    @property
    def total_seconds(self) -> float:
        return self.speech_seconds + self.silence_seconds

    @property
    def silence_fraction(self) -> float:
        if self.total_seconds == 0.0:
            return 0.0
        return self.silence_seconds / self.total_seconds


def ssr_stats(labels_list: Iterable[np.ndarray], params: FrameParams | None = None) -> SsrStats:
    """Sum frame labels over a corpus: seconds = frame count * hop."""
    params = params or FrameParams()
    speech = 0
    total = 0
    for labels in labels_list:
        labels = np.asarray(labels)
        speech += int(np.sum(labels != 0))
        total += int(labels.size)
    hop = params.hop_seconds
    return SsrStats(speech_seconds=speech * hop, silence_seconds=(total - speech) * hop)


@dataclass
class ManifestEntry:
    """One generated mixture. JSONL row of the dataset manifest."""

    clean_id: str
    noise_type: str
    snr_db: float
    split: str
    noise_offset: int
    seed: int
    output_path: str
    label_path: str

    def to_dict(self) -> dict:
        return {
            "clean_id": self.clean_id,
            "noise_type": self.noise_type,
            "snr_db": self.snr_db,
            "split": self.split,
            "noise_offset": self.noise_offset,
            "seed": self.seed,
            "output_path": self.output_path,
            "label_path": self.label_path,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "ManifestEntry":
        return cls(
            clean_id=row["clean_id"],
            noise_type=row["noise_type"],
            snr_db=float(row["snr_db"]),
            split=row["split"],
            noise_offset=int(row["noise_offset"]),
            seed=int(row["seed"]),
            output_path=row["output_path"],
            label_path=row["label_path"],
        )

    @property
    def mixture_id(self) -> str:
        return mixture_id(self.split, self.noise_type, self.snr_db, self.clean_id)


def format_snr(snr_db: float) -> str:
    """Directory-name form of an SNR level: integral values lose the decimal."""
    snr = float(snr_db)
    if snr == int(snr):
        return str(int(snr))
    return ("%g" % snr)


def mixture_id(split: str, noise_type: str, snr_db: float, clean_id: str) -> str:
    """Canonical id of one mixture; doubles as its relative path stem."""
    return f"{split}/{noise_type}/{format_snr(snr_db)}/{clean_id}"


def write_manifest(path: str | Path, entries: Iterable[ManifestEntry]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    entries = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                entries.append(ManifestEntry.from_dict(json.loads(line)))
    return entries


def labels_to_bits(labels: np.ndarray) -> str:
    return "".join("1" if v else "0" for v in np.asarray(labels).astype(np.uint8))


def bits_to_labels(bits: str) -> np.ndarray:
    return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")


def write_labels(path: str | Path, items: Iterable[tuple[str, np.ndarray]]) -> None:
    """Label file: one line per utterance, `<id> <0/1 string>`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for utterance_id, labels in items:
            handle.write(f"{utterance_id} {labels_to_bits(labels)}\n")


def read_labels(path: str | Path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            utterance_id, _, bits = line.partition(" ")
            if not bits or set(bits) - {"0", "1"}:
                raise ValueError(f"malformed label line for {utterance_id!r}")
            out[utterance_id] = bits_to_labels(bits)
    return out


def read_labels_many(paths: Iterable[str | Path]) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for path in paths:
        out.update(read_labels(path))
    return out


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
