"""Forward and backward passes of the measurement auto-encoder.

The encoder is the complex linear map ``y = A x + z`` written as two real
linear maps that share the blocks ``Re A`` and ``Im A``.  The decoder is a
fully connected network ``2L -> Q -> Q -> N`` with ReLU hidden layers and a
sigmoid output that scores each device as active.

All functions work on mini-batches: signals have shape ``(B, N)`` and
measurements ``(B, L)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from ..core import MeasurementMatrix, SplitComplexVector, complex_matvec
from ..datagen import gen_noise
from ..exceptions import DegenerateMatrixError

__all__ = [
    "CLIP_EPS",
    "DecoderParams",
    "Gradients",
    "AdamState",
    "init_decoder",
    "init_matrix",
    "encoder_forward",
    "decoder_forward",
    "cross_entropy_loss",
    "backward",
    "adam_step",
    "project_pilot_power",
]

CLIP_EPS = 1e-7


@dataclass
class DecoderParams:
    theta1: np.ndarray
    b1: np.ndarray
    theta2: np.ndarray
    b2: np.ndarray
    theta3: np.ndarray
    b3: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name, np.asarray(getattr(self, f.name), dtype=np.float64))
        Q, twoL = self.theta1.shape
        N = self.theta3.shape[0]
        expected = {
            "b1": (Q,), "theta2": (Q, Q), "b2": (Q,), "theta3": (N, Q), "b3": (N,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )
        if twoL % 2:
            raise ValueError("theta1 must have an even number of input columns (2L)")

    @property
    def L(self) -> int:
        return self.theta1.shape[1] // 2

    @property
    def Q(self) -> int:
        return self.theta1.shape[0]

    @property
    def N(self) -> int:
        return self.theta3.shape[0]

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "DecoderParams":
        return DecoderParams(**{k: v.copy() for k, v in self.as_dict().items()})

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.as_dict().values())


@dataclass
class Gradients:
    """Gradients of the loss for every trainable array, keyed like the parameters."""

    decoder: dict
    a_re: np.ndarray
    a_im: np.ndarray

    def as_dict(self) -> dict:
        return {**self.decoder, "a_re": self.a_re, "a_im": self.a_im}

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(g))) for g in self.as_dict().values())


def init_decoder(N: int, L: int, Q: int, rng: np.random.Generator) -> DecoderParams:
    """Glorot-uniform weights, zero biases."""

    def glorot(fan_out, fan_in):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=(fan_out, fan_in))

    return DecoderParams(
        theta1=glorot(Q, 2 * L), b1=np.zeros(Q),
        theta2=glorot(Q, Q), b2=np.zeros(Q),
        theta3=glorot(N, Q), b3=np.zeros(N),
    )


def init_matrix(L: int, N: int, rng: np.random.Generator, project: bool = True) -> MeasurementMatrix:
    """i.i.d. ``CN(0, 1)`` entries, optionally rescaled to column norm ``sqrt(L)``."""
    s = np.sqrt(0.5)
    A = MeasurementMatrix(rng.normal(0.0, s, (L, N)), rng.normal(0.0, s, (L, N)))
    return project_pilot_power(A) if project else A


def project_pilot_power(A: MeasurementMatrix) -> MeasurementMatrix:
    """Rescale every column of ``A`` to Euclidean norm ``sqrt(L)``."""
    norms = A.column_norms()
    bad = np.flatnonzero(norms == 0)
    if bad.size:
        raise DegenerateMatrixError(f"columns {bad.tolist()} are identically zero")
    scale = np.sqrt(A.L) / norms
    return MeasurementMatrix(A.a_re * scale, A.a_im * scale)


def encoder_forward(A: MeasurementMatrix, x: SplitComplexVector, sigma2: float,
                    rng: np.random.Generator | None = None) -> SplitComplexVector:
    """Noisy measurements ``A x + z`` with ``z ~ CN(0, sigma2 I)``; ``sigma2=0`` skips the noise."""
    y = complex_matvec(A, x)
    if sigma2 == 0:
        return y
    if rng is None:
        raise ValueError("a random generator is required when sigma2 > 0")
    size = None if len(y.shape) == 1 else y.shape[0]
    return y + gen_noise(A.L, sigma2, rng, size=size)


def _sigmoid(z):
    # Branch-free stable form: never exponentiates a positive number.
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def decoder_forward(W: DecoderParams, y: SplitComplexVector):
    """Soft support scores in ``[0, 1]^N`` and the activations needed by :func:`backward`."""
    if y.shape[-1] != W.L:
        raise ValueError(f"measurement length {y.shape[-1]} does not match decoder L={W.L}")
    u = np.concatenate([y.re, y.im], axis=-1)
    z1 = u @ W.theta1.T + W.b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ W.theta2.T + W.b2
    h2 = np.maximum(z2, 0.0)
    z3 = h2 @ W.theta3.T + W.b3
    alpha_tilde = _sigmoid(z3)
    cache = {"u": u, "z1": z1, "h1": h1, "z2": z2, "h2": h2, "alpha_tilde": alpha_tilde}
    return alpha_tilde, cache


def cross_entropy_loss(alpha_tilde, alpha) -> float:
    """Binary cross-entropy averaged over devices and samples.

    Scores are clipped to ``[CLIP_EPS, 1 - CLIP_EPS]`` first so the loss is finite.
    """
    a = np.clip(np.asarray(alpha_tilde, dtype=np.float64), CLIP_EPS, 1.0 - CLIP_EPS)
    t = np.asarray(alpha, dtype=np.float64)
    return float(np.mean(-(t * np.log(a) + (1.0 - t) * np.log(1.0 - a))))


def backward(A: MeasurementMatrix, W: DecoderParams, x: SplitComplexVector, alpha,
             cache: dict, freeze_matrix: bool = False) -> Gradients:
    """Exact gradient of :func:`cross_entropy_loss` w.r.t. the decoder and ``A``.

    ``x`` and ``alpha`` are the batch that produced ``cache``.  The noise drawn in
    the forward pass does not depend on the parameters, so it drops out.
    Where the clip is active the loss is flat and the gradient is zero.
    """
    s = cache["alpha_tilde"]
    t = np.asarray(alpha, dtype=np.float64)
    inside = (s > CLIP_EPS) & (s < 1.0 - CLIP_EPS)
    dz3 = (s - t) * inside / s.size

    h1, h2, u = cache["h1"], cache["h2"], cache["u"]
    g = {"theta3": dz3.T @ h2, "b3": dz3.sum(axis=0)}
    dz2 = (dz3 @ W.theta3) * (cache["z2"] > 0)
    g["theta2"] = dz2.T @ h1
    g["b2"] = dz2.sum(axis=0)
    dz1 = (dz2 @ W.theta2) * (cache["z1"] > 0)
    g["theta1"] = dz1.T @ u
    g["b1"] = dz1.sum(axis=0)

    if freeze_matrix:
        return Gradients(g, np.zeros_like(A.a_re), np.zeros_like(A.a_im))

    du = dz1 @ W.theta1
    L = W.L
    dy_re, dy_im = du[..., :L], du[..., L:]
    # y_re = A_re x_re - A_im x_im ; y_im = A_im x_re + A_re x_im
    ga_re = dy_re.T @ x.re + dy_im.T @ x.im
    ga_im = dy_im.T @ x.re - dy_re.T @ x.im
    return Gradients(g, ga_re, ga_im)


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params: dict, grads: dict):
    """One bias-corrected ADAM update.

    Returns ``(new_params, new_state)``; neither input is modified.  Keys of
    ``params`` without a gradient entry are passed through untouched.
    """
    t = state.t + 1
    m, v, new = dict(state.m), dict(state.v), dict(params)
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for k, g in grads.items():
        m_k = state.m.get(k, 0.0) * state.beta1 + (1.0 - state.beta1) * g
        v_k = state.v.get(k, 0.0) * state.beta2 + (1.0 - state.beta2) * (g * g)
        m[k], v[k] = m_k, v_k
        new[k] = params[k] - state.lr * (m_k / c1) / (np.sqrt(v_k / c2) + state.eps)
    return new, AdamState(state.lr, state.beta1, state.beta2, state.eps, t, m, v)
