from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_random_state

from .._validation import check_binary, check_complex_array
from ..checkpoint import load_checkpoint, save_checkpoint
from ..core import Dataset, MeasurementMatrix, SplitComplexVector, support_of
from ..metrics import calibrate_threshold, error_rate, hard_threshold
from .network import decoder_forward, encoder_forward
from .training import TrainConfig, train


class SupportAutoencoder(BaseEstimator):
    """Learned measurement matrix plus neural support detector.

    ``fit`` takes sparse complex signals ``X`` of shape ``(n_samples, N)``.
    The fitted model then works on measurements: ``transform`` maps signals
    to noisy measurements ``Y = X A^T + Z`` and ``predict`` / ``predict_proba``
    map measurements back to support decisions / scores.

    Parameters
    ----------
    n_measurements : int
        Pilot length ``L``.
    hidden_width : int or None
        Neurons per hidden layer; ``None`` uses ``8 * n_measurements``.
    sigma2 : float
        Noise variance of the measurement channel.
    freeze_matrix : bool
        Keep the measurement matrix fixed at ``initial_matrix`` (or a random
        Gaussian draw) and train only the decoder.
    initial_matrix : complex array of shape (L, N), optional
    threshold : float
        Decision threshold used by ``predict`` until :meth:`calibrate` runs.
    validation_fraction : float
        Share of ``X`` held out for early stopping when ``X_val`` is not given.
    random_state : int or None
    """

    def __init__(self, n_measurements=12, hidden_width=None, sigma2=0.1,
                 learning_rate=1e-3, batch_size=128, max_epochs=100_000, patience=5,
                 loss_change_tol=1e-5, freeze_matrix=False, initial_matrix=None,
                 threshold=0.5, validation_fraction=0.1, random_state=None):
        self.n_measurements = n_measurements
        self.hidden_width = hidden_width
        self.sigma2 = sigma2
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.loss_change_tol = loss_change_tol
        self.freeze_matrix = freeze_matrix
        self.initial_matrix = initial_matrix
        self.threshold = threshold
        self.validation_fraction = validation_fraction
        self.random_state = random_state

    def _train_config(self, seed):
        return TrainConfig(
            Q=self.hidden_width, lr=self.learning_rate, batch_size=self.batch_size,
            max_epochs=self.max_epochs, patience=self.patience,
            loss_change_tol=self.loss_change_tol, freeze_matrix=self.freeze_matrix,
            seed=seed,
        )

    @staticmethod
    def _as_dataset(X, y, role):
        x = SplitComplexVector.from_complex(X)
        alpha = support_of(x) if y is None else check_binary(y)
        return Dataset(x, alpha, role=role)

    def fit(self, X, y=None, X_val=None, y_val=None):
        """Train on signals ``X``; ``y`` defaults to the support of ``X``."""
        X = check_complex_array(X)
        rs = check_random_state(self.random_state)
        seed = int(rs.randint(np.iinfo(np.int32).max))
        if X_val is None:
            n_val = max(1, int(round(self.validation_fraction * len(X))))
            if n_val >= len(X):
                raise ValueError("not enough samples to hold out a validation split")
            perm = rs.permutation(len(X))
            val_idx, tr_idx = perm[:n_val], perm[n_val:]
            X_val = X[val_idx]
            y_val = None if y is None else np.asarray(y)[val_idx]
            X = X[tr_idx]
            y = None if y is None else np.asarray(y)[tr_idx]
        X_val = check_complex_array(X_val, name="X_val", n_features=X.shape[1])

        init_A = None
        if self.initial_matrix is not None:
            init_A = MeasurementMatrix.from_complex(self.initial_matrix)
        result = train(
            self._as_dataset(X, y, "train"), self._as_dataset(X_val, y_val, "validation"),
            self._train_config(seed), self.sigma2, self.n_measurements, init_A=init_A,
        )
        self.matrix_ = result.A
        self.decoder_ = result.W
        self.log_ = result.log
        self.best_epoch_ = result.best_epoch
        self.threshold_ = float(self.threshold)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "decoder_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    @property
    def measurement_matrix_(self) -> np.ndarray:
        """The (learned) pilot matrix as a complex ``(L, N)`` array."""
        self._check_fitted()
        return self.matrix_.to_complex()

    def transform(self, X, random_state=None):
        """Noisy measurements of signals ``X`` through the fitted matrix."""
        self._check_fitted()
        X = check_complex_array(X, n_features=self.n_features_in_)
        rng = np.random.default_rng(random_state)
        y = encoder_forward(self.matrix_, SplitComplexVector.from_complex(X), self.sigma2, rng)
        return y.to_complex()

    def predict_proba(self, Y):
        """Per-device activity scores in ``[0, 1]`` for measurements ``Y``."""
        self._check_fitted()
        Y = check_complex_array(Y, name="Y", n_features=self.decoder_.L)
        scores, _ = decoder_forward(self.decoder_, SplitComplexVector.from_complex(Y))
        return scores

    def predict(self, Y):
        return hard_threshold(self.predict_proba(Y), self.threshold_)

    def calibrate(self, Y, alpha):
        """Set ``threshold_`` to the grid threshold that minimises the error rate on ``(Y, alpha)``."""
        cal = calibrate_threshold(self.predict_proba(Y), alpha)
        self.threshold_ = cal.r_star
        self.calibration_ = cal
        return cal

    def score(self, Y, alpha):
        """Per-entry accuracy, ``1 - error_rate``."""
        return 1.0 - error_rate(self.predict(Y), alpha)

    def save(self, path):
        self._check_fitted()
        save_checkpoint(path, self.matrix_, self.decoder_, self.threshold_)

    @classmethod
    def load(cls, path, sigma2=0.1):
        A, W, r = load_checkpoint(path)
        est = cls(n_measurements=W.L, hidden_width=W.Q, sigma2=sigma2, threshold=r)
        est.matrix_, est.decoder_, est.threshold_ = A, W, r
        est.n_features_in_ = W.N
        est.log_ = []
        return est
