"""Toolkit for building noisy voice-activity-detection benchmarks.

Pipeline stages: frame labeling from word alignments, silence-padded
concatenation, speech-shaped and babble noise synthesis, speech-active SNR
mixing, cepstral feature extraction, a boosted context-window DNN reference
detector, and threshold-sweep detection metrics with per-condition reports.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .corpus import (FrameParams, ManifestEntry, SAMPLE_RATE, Utterance,
                     derive_seed, read_labels, read_manifest, write_labels,
                     write_manifest)
from .labeling import AlignmentTrack, labels_from_track
from .features import add_deltas, cmvn, extract_features, gfcc, mfcc
from .bdnn import BdnnModel, ContextSpec, TrainConfig, predict_frames, train
from .metrics import EvalReport, ScoreSet, aggregate, det_points, eer, min_dcf, roc_auc
from .mixer import MixResult, mix_at_snr, subsample

__all__ = [
    "__version__",
    "FrameParams", "ManifestEntry", "SAMPLE_RATE", "Utterance", "derive_seed",
    "read_labels", "read_manifest", "write_labels", "write_manifest",
    "AlignmentTrack", "labels_from_track",
    "add_deltas", "cmvn", "extract_features", "gfcc", "mfcc",
    "BdnnModel", "ContextSpec", "TrainConfig", "predict_frames", "train",
    "EvalReport", "ScoreSet", "aggregate", "det_points", "eer", "min_dcf",
    "roc_auc",
    "MixResult", "mix_at_snr", "subsample",
]
