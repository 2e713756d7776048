"""scikit-learn style detectors wrapping the classical solvers.

Every detector is built around a fixed complex pilot matrix.  ``fit`` takes
calibration measurements ``Y`` of shape ``(n_samples, L)`` with their true
supports and tunes the penalty and the magnitude threshold; ``predict``
returns binary support decisions.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .._validation import check_binary, check_complex_array
from ..metrics import error_rate
from .selection import (
    apply_magnitude_threshold,
    calibrate_magnitude_threshold,
    lambda_scale,
    select_lambda,
)
from .solvers import (
    AmpConfig,
    GroupSpec,
    LassoConfig,
    amp_solve,
    lasso_solve,
    sparse_group_lasso_solve,
)

__all__ = [
    "LassoDetector",
    "GroupLassoDetector",
    "SparseGroupLassoDetector",
    "AmpDetector",
]

DEFAULT_FRACTIONS = tuple(np.geomspace(0.01, 1.0, 20))


class _PilotDetector(BaseEstimator):
    name = "detector"

    def _pilots(self):
        A = check_complex_array(self.pilots, name="pilots")
        if np.any(np.linalg.norm(A, axis=0) == 0):
            raise ValueError("pilot matrix has a zero column")
        return A

    def _check_Y(self, Y):
        return check_complex_array(Y, name="Y", n_features=self._pilots().shape[0])

    def _check_fitted(self):
        if not hasattr(self, "threshold_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def _solve(self, Y, lam, x0=None):
        raise NotImplementedError

    def _penalties(self, A, Y):
        raise NotImplementedError

    def fit(self, Y, alpha):
        Y = self._check_Y(Y)
        alpha = check_binary(alpha)
        A = self._pilots()
        # Penalties run from largest to smallest so each solve warm-starts the next.
        penalties = sorted(self._penalties(A, Y), key=lambda lam: -np.sum(lam))
        previous = [None]

        def solve(Yc, lam):
            previous[0] = self._solve(Yc, lam, x0=previous[0])
            return previous[0]

        sel = select_lambda(solve, penalties, Y, alpha)
        self.lambda_ = sel.lam
        self.threshold_ = sel.tau
        self.calibration_error_ = sel.error_rate
        self.selection_ = sel
        self.n_features_in_ = A.shape[1]
        return self

    def solve(self, Y):
        """Coefficient estimates at the fitted penalty, complex ``(n_samples, N)``."""
        self._check_fitted()
        return self._solve(self._check_Y(Y), self.lambda_)

    def predict(self, Y):
        return apply_magnitude_threshold(self.solve(Y), self.threshold_)

    def score(self, Y, alpha):
        """Per-entry accuracy, ``1 - error_rate``."""
        return 1.0 - error_rate(self.predict(Y), alpha)


class LassoDetector(_PilotDetector):
    """Complex LASSO with the penalty chosen on calibration data.

    ``fractions`` are multiples of the median zeroing penalty ``||A^H y||_inf``.
    """

    name = "lasso"

    def __init__(self, pilots=None, fractions=DEFAULT_FRACTIONS, max_iters=1000, tol=1e-6):
        self.pilots = pilots
        self.fractions = fractions
        self.max_iters = max_iters
        self.tol = tol

    def _penalties(self, A, Y):
        return [float(f) * lambda_scale(A, Y) for f in self.fractions]

    def _solve(self, Y, lam, x0=None):
        cfg = LassoConfig(lam=lam, max_iters=self.max_iters, tol=self.tol)
        return lasso_solve(self._pilots(), Y, cfg, x0=x0).x


class SparseGroupLassoDetector(_PilotDetector):
    """Sparse group LASSO over contiguous groups.

    The penalty pair is ``(ratio * lam, (1 - ratio) * lam)`` for every
    ``ratio`` in ``l1_ratios`` and every ``lam`` on the fraction grid.
    """

    name = "sparse_group_lasso"

    def __init__(self, pilots=None, group_size=5, l1_ratios=(0.25, 0.5, 0.75),
                 fractions=DEFAULT_FRACTIONS, max_iters=1000, tol=1e-6):
        self.pilots = pilots
        self.group_size = group_size
        self.l1_ratios = l1_ratios
        self.fractions = fractions
        self.max_iters = max_iters
        self.tol = tol

    def _spec(self):
        return GroupSpec.for_n(self._pilots().shape[1], self.group_size)

    def _penalties(self, A, Y):
        s1 = lambda_scale(A, Y)
        s2 = lambda_scale(A, Y, self.group_size)
        out = []
        for r in self.l1_ratios:
            scale = r * s1 + (1 - r) * s2
            out += [(float(r * f * scale), float((1 - r) * f * scale)) for f in self.fractions]
        return out

    def _solve(self, Y, lam, x0=None):
        lam1, lam2 = lam
        return sparse_group_lasso_solve(
            self._pilots(), Y, self._spec(), lam1, lam2, self.max_iters, self.tol, x0=x0
        ).x


class GroupLassoDetector(SparseGroupLassoDetector):
    """Group LASSO over contiguous groups of ``group_size`` devices."""

    name = "group_lasso"

    def __init__(self, pilots=None, group_size=5, fractions=DEFAULT_FRACTIONS,
                 max_iters=1000, tol=1e-6):
        super().__init__(pilots, group_size, (0.0,), fractions, max_iters, tol)

    def _penalties(self, A, Y):
        s2 = lambda_scale(A, Y, self.group_size)
        return [(0.0, float(f) * s2) for f in self.fractions]


class AmpDetector(_PilotDetector):
    """Soft-threshold AMP followed by a calibrated magnitude threshold."""

    name = "amp"

    def __init__(self, pilots=None, theta=1.1, max_iters=200, tol=1e-6, damping=0.0):
        self.pilots = pilots
        self.theta = theta
        self.max_iters = max_iters
        self.tol = tol
        self.damping = damping

    def _solve(self, Y, lam=None, x0=None):
        cfg = AmpConfig(max_iters=self.max_iters, damping=self.damping,
                        theta=self.theta, tol=self.tol)
        return amp_solve(self._pilots(), Y, cfg).x

    def fit(self, Y, alpha):
        Y = self._check_Y(Y)
        thr = calibrate_magnitude_threshold(self._solve(Y), check_binary(alpha))
        self.lambda_ = None
        self.threshold_ = thr.tau
        self.calibration_error_ = thr.error_rate
        self.n_features_in_ = self._pilots().shape[1]
        return self
