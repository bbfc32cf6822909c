"""Frame labels from forced alignments, plus silence harvesting.

A frame is speech iff its center time falls inside a word interval; word
intervals are half-open [start, end) seconds. Silence harvesting returns the
merged sample spans of nonspeech frame runs so real recorded silence (breaths,
room tone) can be reused when corpora are restitched.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import FrameParams, iter_jsonl, write_jsonl


@dataclass
class AlignmentTrack:
    """Word timing for one utterance. `words` holds (start, end) seconds."""

    utterance_id: str
    words: list[tuple[float, float]]
    duration: float

    def validate(self) -> None:
        prev_end = 0.0
        for start, end in self.words:
            if not (0.0 <= start < end):
                raise ValueError(f"{self.utterance_id}: bad word interval ({start}, {end})")
            if start < prev_end:
                raise ValueError(f"{self.utterance_id}: overlapping word intervals")
            prev_end = end
        if self.words and self.words[-1][1] > self.duration + 1e-6:
            raise ValueError(f"{self.utterance_id}: word interval exceeds duration")

    def to_dict(self) -> dict:
        return {
            "id": self.utterance_id,
            "words": [[s, e] for s, e in self.words],
            "duration": self.duration,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "AlignmentTrack":
        return cls(
            utterance_id=row["id"],
            words=[(float(s), float(e)) for s, e in row["words"]],
            duration=float(row["duration"]),
        )


def read_alignments(path: str | Path) -> list[AlignmentTrack]:
    return [AlignmentTrack.from_dict(row) for row in iter_jsonl(path)]


def write_alignments(path: str | Path, tracks: Iterable[AlignmentTrack]) -> None:
    write_jsonl(path, (track.to_dict() for track in tracks))


def convert_release_alignments(lines: Iterable[str]) -> list[AlignmentTrack]:
    """Convert the released alignment format to tracks.

    Each line: `<id> "<comma-separated tokens>" "<comma-separated end times>"`.
    Empty tokens mark pauses; token k ends at time k and starts at time k-1
    (0.0 for the first). Consecutive word tokens are merged into one interval.
    """
    tracks = []
    for raw in lines:
        raw = raw.strip()
        if not raw:
            continue
        parts = raw.split('"')
        if len(parts) < 4:
            raise ValueError(f"malformed alignment line: {raw[:60]!r}")
        utterance_id = parts[0].strip()
        tokens = parts[1].split(",")
        ends = [float(v) for v in parts[3].split(",")]
        if len(tokens) != len(ends):
            raise ValueError(f"{utterance_id}: token/time count mismatch")
        words: list[tuple[float, float]] = []
        start = 0.0
        for token, end in zip(tokens, ends):
            if token:  # non-empty token = spoken word
                if words and abs(words[-1][1] - start) < 1e-9:
                    words[-1] = (words[-1][0], end)
                else:
                    words.append((start, end))
            start = end
        tracks.append(AlignmentTrack(utterance_id=utterance_id, words=words,
                                     duration=ends[-1] if ends else 0.0))
    return tracks


def labels_from_track(track: AlignmentTrack, num_samples: int,
                      params: FrameParams | None = None) -> np.ndarray:
    """Frame labels (uint8) by the frame-center rule."""
    params = params or FrameParams()
    count = params.num_frames(num_samples)
    labels = np.zeros(count, dtype=np.uint8)
    if count == 0:
        return labels
    centers = np.arange(count) * params.hop_seconds + params.window_seconds / 2.0
    for start, end in track.words:
        labels[(centers >= start) & (centers < end)] = 1
    return labels


def silence_spans(labels: np.ndarray, num_samples: int,
                  params: FrameParams | None = None) -> list[tuple[int, int]]:
    """Merged sample spans [start, end) of contiguous nonspeech frame runs.

    A run of frames i..j spans from frame i's first sample to frame j's last,
    i.e. (j - i) * hop + window samples, clipped to the signal.
    """
    params = params or FrameParams()
    labels = np.asarray(labels)
    spans = []
    run_start = None
    for index in range(len(labels) + 1):
        is_silence = index < len(labels) and labels[index] == 0
        if is_silence and run_start is None:
            run_start = index
        elif not is_silence and run_start is not None:
            first, _ = params.frame_span(run_start)
            _, last_end = params.frame_span(index - 1)
            spans.append((first, min(last_end, num_samples)))
            run_start = None
    return spans


def extract_silence(samples: np.ndarray, labels: np.ndarray,
                    params: FrameParams | None = None) -> list[np.ndarray]:
    """Cut the silence audio out of an utterance, one array per nonspeech run."""
    return [samples[a:b] for a, b in silence_spans(labels, len(samples), params)]


@dataclass
class SilencePool:
    """Recorded-silence clips fused into one signal, consumed sequentially.

    `take` reads from a cursor that wraps around when the unified signal is
    exhausted, so consumption order alone determines every inserted pause —
    no randomness involved. One pool instance belongs to one worker; parallel
    pipelines derive per-worker pools at disjoint cursor offsets.
    """

    clips: list[np.ndarray] = field(default_factory=list)
    cursor: int = 0
    _unified: np.ndarray | None = field(default=None, repr=False, compare=False)

    def add(self, clip: np.ndarray) -> None:
        if len(clip):
            self.clips.append(np.asarray(clip, dtype=np.float64))
            self._unified = None

    def extend(self, clips: Iterable[np.ndarray]) -> None:
        for clip in clips:
            self.add(clip)

    @property
    def total_samples(self) -> int:
        return sum(len(clip) for clip in self.clips)

    def take(self, count: int) -> np.ndarray:
        """Next `count` silence samples, advancing the cursor (with wraparound)."""
        if count <= 0:
            return np.zeros(0, dtype=np.float64)
        if not self.clips:
            raise ValueError("silence pool is empty")
        if self._unified is None or len(self._unified) != self.total_samples:
            self._unified = np.concatenate(self.clips)
        unified = self._unified
        index = (self.cursor + np.arange(count)) % len(unified)
        self.cursor = int((self.cursor + count) % len(unified))
        return unified[index]
