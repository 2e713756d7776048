"""Hard thresholding of soft support scores and the per-entry error rate."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._validation import check_binary

__all__ = [
    "DEFAULT_GRID",
    "ThresholdCalibration",
    "hard_threshold",
    "error_rate",
    "calibrate_threshold",
    "detect",
]

DEFAULT_GRID = np.round(np.arange(1, 100) / 100.0, 2)


def hard_threshold(alpha_tilde, r: float) -> np.ndarray:
    """``1`` where the score is at least ``r`` (inclusive), else ``0``."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {r}")
    return (np.asarray(alpha_tilde) >= r).astype(np.int8)


def error_rate(alpha_hat, alpha) -> float:
    """Fraction of (sample, device) entries where the decision disagrees with the label."""
    alpha_hat = check_binary(alpha_hat, name="alpha_hat")
    alpha = check_binary(alpha, name="alpha")
    if alpha_hat.shape != alpha.shape:
        raise ValueError(f"shape mismatch: {alpha_hat.shape} vs {alpha.shape}")
    if alpha.size == 0:
        raise ValueError("error_rate of an empty batch is undefined")
    return float(np.count_nonzero(alpha_hat != alpha)) / alpha.size


@dataclass(frozen=True)
class ThresholdCalibration:
    r_star: float
    pe_star: float
    grid: tuple  # ((r, P_E(r)), ...)

    def write_csv(self, path) -> None:
        """Grid rows tagged ``grid`` followed by one ``optimum`` row."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "P_E", "kind"])
            for r, pe in self.grid:
                w.writerow([f"{r:.2f}", repr(pe), "grid"])
            w.writerow([f"{self.r_star:.2f}", repr(self.pe_star), "optimum"])


def calibrate_threshold(alpha_tilde, alpha, grid=DEFAULT_GRID) -> ThresholdCalibration:
    """Pick the grid threshold with the lowest error rate; ties go to the smaller ``r``.

    Uses a histogram of the scores so the whole grid costs one pass over the data.
    """
    s = np.asarray(alpha_tilde, dtype=np.float64).ravel()
    t = check_binary(alpha, name="alpha").ravel()
    if s.size == 0:
        raise ValueError("calibration set is empty")
    if s.shape != t.shape:
        raise ValueError("scores and labels differ in size")
    grid = np.asarray(grid, dtype=np.float64)
    # position k = number of grid points <= score; score >= grid[j] iff k > j
    k = np.searchsorted(grid, s, side="right")
    pos = np.bincount(k[t == 1], minlength=grid.size + 1)
    neg = np.bincount(k[t == 0], minlength=grid.size + 1)
    # for threshold j: misses = positives with k <= j, false alarms = negatives with k > j
    misses = np.cumsum(pos)[:-1]
    false_alarms = neg.sum() - np.cumsum(neg)[:-1]
    pe = (misses + false_alarms) / s.size
    j = int(np.argmin(pe))
    return ThresholdCalibration(
        float(grid[j]), float(pe[j]), tuple(zip(grid.tolist(), pe.tolist()))
    )


def detect(W, r: float, y) -> np.ndarray:
    """End-to-end decision: decoder scores followed by the hard threshold."""
    from .autoencoder.network import decoder_forward

    alpha_tilde, _ = decoder_forward(W, y)
    return hard_threshold(alpha_tilde, r)
