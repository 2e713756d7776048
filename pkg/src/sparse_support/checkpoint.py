"""Binary ``.ssae`` checkpoints for a trained matrix, decoder and threshold.

Layout (little-endian): magic ``SSAE1``; version, N, L, Q as u32; then
``a_re, a_im, theta1, b1, theta2, b2, theta3, b3`` as row-major float64;
then the threshold as one float64.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .autoencoder.network import DecoderParams
from .core import MeasurementMatrix
from .exceptions import FormatError

__all__ = ["VERSION", "save_checkpoint", "load_checkpoint"]

MAGIC = b"SSAE1"
VERSION = 1
_HEADER = struct.Struct("<5sIIII")


def _sections(N, L, Q):
    return [
        ("a_re", (L, N)), ("a_im", (L, N)),
        ("theta1", (Q, 2 * L)), ("b1", (Q,)),
        ("theta2", (Q, Q)), ("b2", (Q,)),
        ("theta3", (N, Q)), ("b3", (N,)),
        ("r_star", ()),
    ]


def save_checkpoint(path, A: MeasurementMatrix, W: DecoderParams, r_star: float = 0.5) -> None:
    if (A.L, A.N) != (W.L, W.N):
        raise ValueError("matrix and decoder disagree on (L, N)")
    arrays = {"a_re": A.a_re, "a_im": A.a_im, **W.as_dict(), "r_star": np.float64(r_star)}
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, W.N, W.L, W.Q))
        for name, _ in _sections(W.N, W.L, W.Q):
            fh.write(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes())


def load_checkpoint(path, expect_shape=None):
    """Read a checkpoint; returns ``(A, W, r_star)``.

    ``expect_shape`` is an optional ``(N, L, Q)`` tuple the file must match.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("file shorter than the header", field="header")
    magic, version, N, L, Q = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"expected {MAGIC!r}, found {magic!r}", field="magic")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", field="version")
    for name, value in (("N", N), ("L", L), ("Q", Q)):
        if value < 1:
            raise FormatError("must be positive", field=name)
    if expect_shape is not None:
        for name, got, want in zip(("N", "L", "Q"), (N, L, Q), expect_shape):
            if want is not None and got != want:
                raise FormatError(f"checkpoint has {name}={got}, expected {want}", field=name)

    out, offset = {}, _HEADER.size
    for name, shape in _sections(N, L, Q):
        count = int(np.prod(shape, dtype=np.int64))
        nbytes = 8 * count
        if offset + nbytes > len(raw):
            raise FormatError("file truncated", field=name)
        out[name] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(raw):
        raise FormatError(f"{len(raw) - offset} unexpected trailing bytes", field="trailer")

    A = MeasurementMatrix(out.pop("a_re"), out.pop("a_im"))
    r_star = float(out.pop("r_star"))
    return A, DecoderParams(**out), r_star
