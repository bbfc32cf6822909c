"""Report emission: delimited tables plus rendered figures.

Every evaluation artifact is written twice over: machine-readable CSV for
downstream tooling, and a matplotlib rendering of the same numbers (AUC grid
heatmap, DET curve on probit axes) saved next to it.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402
from scipy.stats import norm  # noqa: E402

from .corpus import format_snr  # noqa: E402
from .metrics import EvalReport  # noqa: E402

_DET_TICKS = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.10, 0.20, 0.40)


def write_auc_csv(report: EvalReport, path: str | Path) -> None:
    """AUC grid: one row per SNR, one column per noise type, plus averages."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["snr_db", *report.noise_types, "avg"])
        for snr in report.snr_levels:
            row = [format_snr(snr)]
            for noise in report.noise_types:
                value = report.auc.get((noise, snr))
                row.append(f"{value:.6f}" if value is not None else "")
            row.append(f"{report.per_snr_auc[snr]:.6f}")
            writer.writerow(row)
        avg_row = ["avg"]
        for noise in report.noise_types:
            avg_row.append(f"{report.per_noise_auc[noise]:.6f}")
        avg_row.append(f"{report.overall_auc:.6f}")
        writer.writerow(avg_row)


def write_summary_csv(report: EvalReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["metric", "value"])
        writer.writerow(["overall_auc", f"{report.overall_auc:.6f}"])
        writer.writerow(["pooled_eer", f"{report.pooled_eer:.6f}"])
        writer.writerow(["pooled_min_dcf", f"{report.pooled_min_dcf:.6f}"])
        writer.writerow(["conditions", str(len(report.auc))])
        writer.writerow(["conditions_skipped", str(len(report.skipped))])


def write_det_csv(det: np.ndarray, path: str | Path) -> None:
    """DET support points: threshold, p_fa, p_miss per row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["threshold", "p_fa", "p_miss"])
        for threshold, p_fa, p_miss in det:
            writer.writerow([repr(float(threshold)), f"{p_fa:.10f}", f"{p_miss:.10f}"])


def render_auc_figure(report: EvalReport, path: str | Path) -> None:
    """Heatmap of the per-condition AUC grid."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = np.full((len(report.snr_levels), len(report.noise_types)), np.nan)
    for (noise, snr), value in report.auc.items():
        grid[report.snr_levels.index(snr), report.noise_types.index(noise)] = value

    fig, ax = plt.subplots(figsize=(1.0 + 1.1 * len(report.noise_types),
                                    1.2 + 0.55 * len(report.snr_levels)))
    image = ax.imshow(grid, aspect="auto", cmap="viridis", vmin=0.5, vmax=1.0)
    ax.set_xticks(range(len(report.noise_types)), report.noise_types,
                  rotation=30, ha="right")
    ax.set_yticks(range(len(report.snr_levels)),
                  [f"{format_snr(s)} dB" for s in report.snr_levels])
    ax.set_xlabel("noise type")
    ax.set_ylabel("SNR")
    ax.set_title(f"Frame AUC by condition (overall {report.overall_auc:.3f})")
    for i in range(grid.shape[0]):
        for j in range(grid.shape[1]):
            if not np.isnan(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center",
                        color="white" if grid[i, j] < 0.85 else "black", fontsize=8)
    fig.colorbar(image, ax=ax, label="AUC")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_det_figure(det: np.ndarray, path: str | Path, label: str = "pooled") -> None:
    """DET curve on probit-warped axes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    p_fa = np.clip(det[:, 1], 1e-5, 1 - 1e-5)
    p_miss = np.clip(det[:, 2], 1e-5, 1 - 1e-5)

    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.plot(norm.ppf(p_fa), norm.ppf(p_miss), lw=1.5, label=label)
    ticks = [norm.ppf(t) for t in _DET_TICKS]
    labels = [f"{t * 100:g}" for t in _DET_TICKS]
    ax.set_xticks(ticks, labels)
    ax.set_yticks(ticks, labels)
    lim = (norm.ppf(5e-4), norm.ppf(0.6))
    ax.set_xlim(lim)
    ax.set_ylim(lim)
    ax.set_xlabel("false alarm rate (%)")
    ax.set_ylabel("miss rate (%)")
    ax.set_title("DET curve")
    ax.grid(True, which="both", lw=0.3, alpha=0.6)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
