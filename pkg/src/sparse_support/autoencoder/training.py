"""Mini-batch ADAM training with pilot-power projection and early stopping."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..core import Dataset, MeasurementMatrix, SplitComplexVector
from ..exceptions import ConfigError, TrainingError
from .network import (
    AdamState,
    DecoderParams,
    adam_step,
    backward,
    cross_entropy_loss,
    decoder_forward,
    encoder_forward,
    init_decoder,
    init_matrix,
    project_pilot_power,
)

logger = logging.getLogger(__name__)

__all__ = ["TrainConfig", "TrainResult", "train", "evaluate_loss"]

# SeedSequence spawn keys for the independent streams used by one run.
_INIT, _SHUFFLE, _NOISE, _VAL_NOISE = range(4)


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser and stopping settings.

    ``Q=None`` means a hidden width of ``8 * L``.  Defaults are the published
    settings (100000 epochs, learning rate 1e-3, batch 128, patience 5).
    """

    Q: int | None = None
    lr: float = 1e-3
    batch_size: int = 128
    max_epochs: int = 100_000
    patience: int = 5
    loss_change_tol: float = 1e-5
    freeze_matrix: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.Q is not None and self.Q < 1:
            raise ConfigError("Q must be at least 1")
        if self.patience < 1:
            raise ConfigError("patience must be at least 1")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be positive")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")

    def hidden_width(self, L: int) -> int:
        return 8 * L if self.Q is None else self.Q


@dataclass
class TrainResult:
    A: MeasurementMatrix
    W: DecoderParams
    log: list = field(default_factory=list)
    best_epoch: int = 0

    @property
    def best_val_loss(self) -> float:
        return min(r["val_loss"] for r in self.log)


def _streams(seed):
    root = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, 0x5AE1])
    return [np.random.default_rng(s) for s in root.spawn(4)]


def evaluate_loss(A, W, data: Dataset, sigma2, rng, batch_size=4096) -> float:
    """Mean cross-entropy over ``data`` with fresh noise from ``rng``."""
    total = 0.0
    n = len(data)
    for start in range(0, n, batch_size):
        x = data.x[start:start + batch_size]
        a = data.alpha[start:start + batch_size]
        out, _ = decoder_forward(W, encoder_forward(A, x, sigma2, rng))
        total += cross_entropy_loss(out, a) * len(a)
    return total / n


def train(train_set: Dataset, val_set: Dataset, cfg: TrainConfig, sigma2: float,
          L: int, init_A: MeasurementMatrix | None = None, epoch_callback=None) -> TrainResult:
    """Jointly train the measurement matrix and decoder.

    Parameters
    ----------
    train_set, val_set : Dataset
        Signals and labels; the noise is drawn fresh on every forward pass.
    cfg : TrainConfig
    sigma2 : float
        Noise variance of the measurement model.
    L : int
        Number of measurements (rows of ``A``).
    init_A : MeasurementMatrix, optional
        Starting matrix.  If omitted a ``CN(0, 1)`` matrix is drawn from the
        run seed.  In the default (trainable) mode the start is projected to
        column norm ``sqrt(L)``; with ``cfg.freeze_matrix`` it is used as-is
        and never changes.
    epoch_callback : callable, optional
        Called as ``epoch_callback(epoch, A, W)`` after every epoch.

    Returns the parameters of the epoch with the lowest validation loss.
    """
    if train_set.N != val_set.N:
        raise ConfigError("train and validation sets must share N")
    N = train_set.N
    Q = cfg.hidden_width(L)
    init_rng, shuffle_rng, noise_rng, _ = _streams(cfg.seed)
    val_seed = _streams(cfg.seed)[_VAL_NOISE].integers(2**63)

    W = init_decoder(N, L, Q, init_rng)
    if init_A is None:
        A = init_matrix(L, N, init_rng, project=not cfg.freeze_matrix)
    else:
        if init_A.L != L or init_A.N != N:
            raise ConfigError(f"init_A has shape {(init_A.L, init_A.N)}, expected {(L, N)}")
        A = init_A if cfg.freeze_matrix else project_pilot_power(init_A)

    params = {**W.as_dict(), "a_re": A.a_re, "a_im": A.a_im}
    state = AdamState(lr=cfg.lr)

    def val_loss(A, W):
        return evaluate_loss(A, W, val_set, sigma2, np.random.default_rng(val_seed))

    best = val_loss(A, W)
    log = [{"epoch": 0, "train_loss": None, "val_loss": best}]
    best_A, best_W, best_epoch = A, W.copy(), 0
    wait = 0
    n = len(train_set)
    xre, xim, alpha = train_set.x.re, train_set.x.im, train_set.alpha

    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        running = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = SplitComplexVector(xre[idx], xim[idx])
            ab = alpha[idx]
            yb = encoder_forward(A, xb, sigma2, noise_rng)
            out, cache = decoder_forward(W, yb)
            running += cross_entropy_loss(out, ab) * len(idx)
            grads = backward(A, W, xb, ab, cache, freeze_matrix=cfg.freeze_matrix)
            gdict = grads.decoder if cfg.freeze_matrix else grads.as_dict()
            params, state = adam_step(state, params, gdict)
            W = DecoderParams(**{k: params[k] for k in grads.decoder})
            if not cfg.freeze_matrix:
                A = project_pilot_power(MeasurementMatrix(params["a_re"], params["a_im"]))
                params["a_re"], params["a_im"] = A.a_re, A.a_im

        train_loss = running / n
        current = val_loss(A, W)
        if not (np.isfinite(train_loss) and np.isfinite(current)):
            raise TrainingError(f"loss became non-finite at epoch {epoch}", log)
        log.append({"epoch": epoch, "train_loss": train_loss, "val_loss": current})
        logger.debug("epoch %d train %.6f val %.6f", epoch, train_loss, current)
        if epoch_callback is not None:
            epoch_callback(epoch, A, W)

        if current < best - cfg.loss_change_tol:
            best, best_A, best_W, best_epoch = current, A, W.copy(), epoch
            wait = 0
        else:
            wait += 1
            if wait >= cfg.patience:
                break

    return TrainResult(best_A, best_W, log, best_epoch)
