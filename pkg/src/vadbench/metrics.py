"""Detection metrics over frame scores: ROC-AUC, EER, minimum DCF, DET points.

All metrics share one threshold sweep: every distinct score is a threshold
(score >= threshold predicts speech), plus a +inf sentinel for the
reject-all point. Ties are grouped, so trapezoidal AUC equals the
rank-statistic value with tie correction.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import NOISE_TYPES

logger = logging.getLogger(__name__)

# Detection cost parameters: missing speech is ten times costlier than a
# false alarm, and speech presence is the rare target class.
DCF_C_MISS = 10.0
DCF_C_FA = 1.0
DCF_P_TARGET = 0.01


def confusion_at(scores: np.ndarray, labels: np.ndarray, threshold: float
                 ) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn) with score >= threshold predicting speech."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    predicted = scores >= threshold
    tp = int(np.sum(predicted & labels))
    fp = int(np.sum(predicted & ~labels))
    fn = int(np.sum(~predicted & labels))
    tn = int(np.sum(~predicted & ~labels))
    return tp, fp, fn, tn


def _sweep(scores: np.ndarray, labels: np.ndarray
           ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(thresholds, p_miss, p_fa) at every distinct score, highest first."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same shape")
    positives = int(labels.sum())
    negatives = int(labels.size - positives)
    if positives == 0 or negatives == 0:
        raise ValueError("metrics need both speech and nonspeech frames")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    is_pos = labels[order].astype(np.int64)
    cum_tp = np.cumsum(is_pos)
    cum_fp = np.cumsum(1 - is_pos)
    # index of the last element in each tie block
    block_end = np.r_[np.nonzero(np.diff(sorted_scores))[0], scores.size - 1]

    thresholds = np.r_[np.inf, sorted_scores[block_end]]
    tp = np.r_[0, cum_tp[block_end]]
    fp = np.r_[0, cum_fp[block_end]]
    p_miss = 1.0 - tp / positives
    p_fa = fp / negatives
    return thresholds, p_miss, p_fa


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve by trapezoid over tie-grouped sweep points."""
    _, p_miss, p_fa = _sweep(scores, labels)
    return float(np.trapezoid(1.0 - p_miss, p_fa))


def eer(scores: np.ndarray, labels: np.ndarray) -> float:
    """Equal error rate, linearly interpolated where P_miss - P_FA changes sign."""
    _, p_miss, p_fa = _sweep(scores, labels)
    diff = p_miss - p_fa  # nonincreasing along the sweep, starts at +1
    k = int(np.argmax(diff <= 0.0))
    if diff[k] > 0.0:
        raise ValueError("P_miss - P_FA never crosses zero")  # unreachable: ends at -1
    d1, d2 = diff[k - 1], diff[k]
    lam = d1 / (d1 - d2) if d1 != d2 else 1.0
    return float(p_fa[k - 1] + lam * (p_fa[k] - p_fa[k - 1]))


def min_dcf(scores: np.ndarray, labels: np.ndarray,
            c_miss: float = DCF_C_MISS, c_fa: float = DCF_C_FA,
            p_target: float = DCF_P_TARGET, normalize: bool = False) -> float:
    """Minimum detection cost over the threshold sweep, unnormalized by default.

    DCF(t) = c_miss * P_miss(t) * p_target + c_fa * P_FA(t) * (1 - p_target).
    The reject-all sentinel costs c_miss * p_target, so with the defaults the
    minimum never exceeds 0.10. With normalize=True the cost is divided by the
    better of the two trivial systems, min(c_miss * p_target,
    c_fa * (1 - p_target)), putting 1.0 at "no better than always guessing".
    """
    _, p_miss, p_fa = _sweep(scores, labels)
    dcf = c_miss * p_miss * p_target + c_fa * p_fa * (1.0 - p_target)
    value = float(np.min(dcf))
    if normalize:
        value /= min(c_miss * p_target, c_fa * (1.0 - p_target))
    return value


def det_points(scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """DET curve support: rows of (threshold, p_fa, p_miss), highest first.

    P_FA is nondecreasing and P_miss nonincreasing along the rows.
    """
    thresholds, p_miss, p_fa = _sweep(scores, labels)
    return np.column_stack([thresholds, p_fa, p_miss])


# ---------------------------------------------------------------------------
# Aggregation over a condition grid
# ---------------------------------------------------------------------------

@dataclass
class ScoreSet:
    """Pooled frame scores and labels for one (noise type, SNR) condition."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64).ravel()
        self.labels = np.asarray(self.labels).ravel()
        if self.scores.shape != self.labels.shape:
            raise ValueError("scores and labels must have the same length")


@dataclass
class EvalReport:
    """Per-condition AUC grid with pooled summary metrics."""

    noise_types: list[str]
    snr_levels: list[float]
    auc: dict[tuple[str, float], float]
    per_noise_auc: dict[str, float]
    per_snr_auc: dict[float, float]
    overall_auc: float
    pooled_eer: float
    pooled_min_dcf: float
    pooled_det: np.ndarray
    skipped: list[tuple[str, float, str]] = field(default_factory=list)


def _canonical_noise_order(present: Sequence[str]) -> list[str]:
    known = [n for n in NOISE_TYPES if n in present]
    extra = sorted(set(present) - set(NOISE_TYPES))
    return known + extra


def aggregate(cells: Mapping[tuple[str, float], ScoreSet],
              normalize_dcf: bool = False) -> EvalReport:
    """Evaluate every condition cell and average without weighting.

    Cell AUCs are computed on that cell's pooled frames; per-noise and
    per-SNR averages are unweighted means over available cells, the overall
    AUC the unweighted mean over all cells. EER, MinDCF, and the DET
    points are computed once over all frames pooled; normalize_dcf divides
    the pooled MinDCF by the best trivial-system cost. Degenerate cells
    (empty or single-class) are skipped with a warning.
    """
    usable: dict[tuple[str, float], ScoreSet] = {}
    skipped: list[tuple[str, float, str]] = []
    for key in sorted(cells, key=lambda k: (str(k[0]), float(k[1]))):
        cell = cells[key]
        if cell.scores.size == 0:
            reason = "no frames"
        elif bool(cell.labels.astype(bool).all()) or not bool(cell.labels.astype(bool).any()):
            reason = "single-class labels"
        else:
            usable[key] = cell
            continue
        logger.warning("skipping condition %s at %s dB: %s", key[0], key[1], reason)
        skipped.append((key[0], float(key[1]), reason))
    if not usable:
        raise ValueError("no usable condition cells")

    noise_types = _canonical_noise_order(sorted({k[0] for k in usable}))
    snr_levels = sorted({float(k[1]) for k in usable})

    auc_by_cell = {key: roc_auc(cell.scores, cell.labels) for key, cell in usable.items()}
    per_noise = {
        noise: float(np.mean([auc_by_cell[k] for k in auc_by_cell if k[0] == noise]))
        for noise in noise_types
    }
    per_snr = {
        snr: float(np.mean([auc_by_cell[k] for k in auc_by_cell if float(k[1]) == snr]))
        for snr in snr_levels
    }
    overall = float(np.mean(list(auc_by_cell.values())))

    pooled_scores = np.concatenate([usable[k].scores for k in sorted(usable)])
    pooled_labels = np.concatenate([usable[k].labels for k in sorted(usable)])
    return EvalReport(
        noise_types=noise_types,
        snr_levels=snr_levels,
        auc={(k[0], float(k[1])): v for k, v in auc_by_cell.items()},
        per_noise_auc=per_noise,
        per_snr_auc=per_snr,
        overall_auc=overall,
        pooled_eer=eer(pooled_scores, pooled_labels),
        pooled_min_dcf=min_dcf(pooled_scores, pooled_labels,
                               normalize=normalize_dcf),
        pooled_det=det_points(pooled_scores, pooled_labels),
        skipped=skipped,
    )
