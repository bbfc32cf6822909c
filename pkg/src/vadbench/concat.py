"""Pairwise utterance concatenation with recorded-silence insertion.

Doubling mean utterance length while raising the silence share: consecutive
utterances (sorted by id) are joined with an inserted silence gap equal to a
fixed fraction of their combined length, audio for the gap drawn from a pool
of real recorded silence. An odd final utterance is dropped.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import FrameParams, Utterance
from .labeling import SilencePool


@dataclass(frozen=True)
class ConcatSpec:
    silence_ratio: float = 0.25
    params: FrameParams = FrameParams()


@dataclass
class ConcatResult:
    utterance: Utterance
    labels: np.ndarray
    inserted_samples: int
    source_ids: tuple[str, str]
    speakers: tuple[str, str]

    def to_manifest_row(self, output_path: str, label_path: str) -> dict:
        return {
            "id": self.utterance.utterance_id,
            "sources": list(self.source_ids),
            "speakers": list(self.speakers),
            "inserted_samples": self.inserted_samples,
            "num_samples": self.utterance.num_samples,
            "output_path": output_path,
            "label_path": label_path,
        }


def pair_ids(ids: Sequence[str]) -> tuple[list[tuple[str, str]], list[str]]:
    """Pair consecutive ids after sorting; the odd leftover is dropped."""
    ordered = sorted(ids)
    pairs = [(ordered[i], ordered[i + 1]) for i in range(0, len(ordered) - 1, 2)]
    dropped = [ordered[-1]] if len(ordered) % 2 else []
    return pairs, dropped


def build_concat(u1: Utterance, u2: Utterance, labels1: np.ndarray, labels2: np.ndarray,
                 pool: SilencePool, spec: ConcatSpec) -> ConcatResult:
    """Join two utterances around an inserted silence gap.

    Gap length = round(silence_ratio * (len1 + len2)) samples, drawn
    sequentially from the pool. Output labels are labels1, a nonspeech run,
    then labels2, padded so the label count equals the frame count of the
    joined signal; speech frame totals of the sources are conserved exactly.
    """
    if u1.rate != u2.rate:
        raise ValueError("cannot concatenate utterances with different rates")
    params = spec.params
    n1 = params.num_frames(u1.num_samples)
    n2 = params.num_frames(u2.num_samples)
    if len(labels1) != n1 or len(labels2) != n2:
        raise ValueError("label length does not match utterance frame count")

    inserted = int(round(spec.silence_ratio * (u1.num_samples + u2.num_samples)))
    gap = pool.take(inserted)
    samples = np.concatenate([u1.samples, gap, u2.samples])

    total_frames = params.num_frames(len(samples))
    pad = total_frames - n1 - n2
    if pad < 0:
        raise ValueError("joined signal has fewer frames than its parts")
    labels = np.concatenate([
        np.asarray(labels1, dtype=np.uint8),
        np.zeros(pad, dtype=np.uint8),
        np.asarray(labels2, dtype=np.uint8),
    ])

    joined_id = f"{u1.utterance_id}+{u2.utterance_id}"
    return ConcatResult(
        utterance=Utterance(joined_id, samples, u1.rate),
        labels=labels,
        inserted_samples=inserted,
        source_ids=(u1.utterance_id, u2.utterance_id),
        speakers=(u1.speaker, u2.speaker),
    )


def concat_corpus(utterances: dict[str, Utterance], labels: dict[str, np.ndarray],
                  pool: SilencePool, spec: ConcatSpec
                  ) -> tuple[list[ConcatResult], list[str]]:
    """Concatenate a whole corpus pairwise, in sorted-id order.

    Returns (results, dropped ids). Deterministic: the pair order fixes the
    sequence of pool reads, which fixes every inserted gap.
    """
    pairs, dropped = pair_ids(list(utterances))
    results = []
    for id1, id2 in pairs:
        results.append(build_concat(utterances[id1], utterances[id2],
                                    labels[id1], labels[id2], pool, spec))
    return results, dropped
