"""Turning coefficient estimates into support decisions, and tuning lambda."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._validation import check_binary

__all__ = [
    "MagnitudeThreshold",
    "LambdaSelection",
    "calibrate_magnitude_threshold",
    "support_extract",
    "apply_magnitude_threshold",
    "lambda_scale",
    "lambda_grid",
    "select_lambda",
]


@dataclass(frozen=True)
class MagnitudeThreshold:
    tau: float
    error_rate: float


def _quantile_grid(mag, n_quantiles):
    grid = np.quantile(mag, np.linspace(0.0, 1.0, n_quantiles))
    return np.unique(np.concatenate([[0.0], grid]))


def calibrate_magnitude_threshold(x_hat, alpha, n_quantiles=101) -> MagnitudeThreshold:
    """Best ``tau`` for the rule ``|x_hat| > tau`` over a quantile grid of observed magnitudes.

    Ties are broken towards the smallest ``tau``.
    """
    mag = np.abs(np.asarray(x_hat)).ravel()
    t = check_binary(alpha).ravel()
    if mag.size == 0 or mag.shape != t.shape:
        raise ValueError("calibration estimates and labels must be non-empty and aligned")
    grid = _quantile_grid(mag, n_quantiles)
    # k = number of grid points strictly below the magnitude; |x| > grid[j] iff k > j
    k = np.searchsorted(grid, mag, side="left")
    pos = np.bincount(k[t == 1], minlength=grid.size + 1)
    neg = np.bincount(k[t == 0], minlength=grid.size + 1)
    misses = np.cumsum(pos)[:-1]
    false_alarms = neg.sum() - np.cumsum(neg)[:-1]
    pe = (misses + false_alarms) / mag.size
    j = int(np.argmin(pe))
    return MagnitudeThreshold(float(grid[j]), float(pe[j]))


def apply_magnitude_threshold(x_hat, tau: float) -> np.ndarray:
    return (np.abs(np.asarray(x_hat)) > tau).astype(np.int8)


def support_extract(x_hat, calibration, n_quantiles=101):
    """Calibrate ``tau`` on ``calibration = (x_hat_cal, alpha_cal)`` and apply it to ``x_hat``.

    Returns ``(tau, alpha_hat)``.
    """
    x_cal, alpha_cal = calibration
    thr = calibrate_magnitude_threshold(x_cal, alpha_cal, n_quantiles)
    return thr.tau, apply_magnitude_threshold(x_hat, thr.tau)


def lambda_scale(A, Y, group_size=1) -> float:
    """Median over samples of the smallest penalty that zeroes the solution.

    For ``group_size=1`` this is ``||A^H y||_inf``; for groups it is
    ``max_g ||A_g^H y||_2 / sqrt(group_size)``.
    """
    A = np.asarray(A, dtype=np.complex128)
    C = np.atleast_2d(Y) @ A.conj()
    if group_size == 1:
        stat = np.max(np.abs(C), axis=1)
    else:
        Cg = C.reshape(len(C), -1, group_size)
        stat = np.max(np.linalg.norm(Cg, axis=2), axis=1) / np.sqrt(group_size)
    return float(np.median(stat))


def lambda_grid(A, Y, group_size=1, n=20, lo=0.01, hi=1.0) -> np.ndarray:
    """Logarithmic grid of ``n`` penalties spanning ``[lo, hi] * lambda_scale``."""
    return np.geomspace(lo, hi, n) * lambda_scale(A, Y, group_size)


@dataclass(frozen=True)
class LambdaSelection:
    lam: object
    tau: float
    error_rate: float
    table: tuple  # ((lam, tau, error_rate), ...) in grid order


def _size(lam):
    return float(np.sum(np.atleast_1d(np.asarray(lam, dtype=np.float64))))


def select_lambda(solve, grid, Y_cal, alpha_cal, n_quantiles=101) -> LambdaSelection:
    """Pick the penalty with the lowest calibration error rate.

    ``solve(Y, lam)`` must return complex estimates of shape ``(I, N)``.  Each
    penalty is paired with its own magnitude threshold.  Ties go to the
    larger (sparser) penalty; for tuple penalties "larger" means larger sum.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("lambda grid is empty")
    table = []
    for lam in grid:
        thr = calibrate_magnitude_threshold(solve(Y_cal, lam), alpha_cal, n_quantiles)
        table.append((lam, thr.tau, thr.error_rate))
    best = min(range(len(table)), key=lambda i: (table[i][2], -_size(table[i][0])))
    lam, tau, err = table[best]
    return LambdaSelection(lam, tau, err, tuple(table))
