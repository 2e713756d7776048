"""Split-complex value types and sample containers.

Complex quantities that pass through the learned encoder are carried as a
pair of real arrays ``(re, im)``.  Every type here accepts a leading batch
axis, so a whole dataset of signals is one :class:`SplitComplexVector` of
shape ``(I, N)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "SplitComplexVector",
    "MeasurementMatrix",
    "Sample",
    "Dataset",
    "ROLES",
    "complex_matvec",
    "support_of",
]

ROLES = ("train", "validation", "test")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SplitComplexVector:
    """A complex vector (or batch of vectors) stored as real and imaginary parts."""

    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re, im = _frozen(self.re), _frozen(self.im)
        if re.shape != im.shape:
            raise ValueError(
                f"real and imaginary parts differ in shape: {re.shape} vs {im.shape}"
            )
        if re.ndim == 0:
            raise ValueError("SplitComplexVector needs at least one axis")
        if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
            raise ValueError("SplitComplexVector entries must be finite")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def from_complex(cls, z) -> "SplitComplexVector":
        z = np.asarray(z, dtype=np.complex128)
        return cls(z.real, z.imag)

    @classmethod
    def zeros(cls, shape) -> "SplitComplexVector":
        return cls(np.zeros(shape), np.zeros(shape))

    def to_complex(self) -> np.ndarray:
        return self.re + 1j * self.im

    @property
    def shape(self) -> tuple:
        return self.re.shape

    def __len__(self) -> int:
        return self.re.shape[0]

    def __getitem__(self, idx) -> "SplitComplexVector":
        return SplitComplexVector(self.re[idx], self.im[idx])

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.re, self.im)

    def __add__(self, other: "SplitComplexVector") -> "SplitComplexVector":
        return SplitComplexVector(self.re + other.re, self.im + other.im)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SplitComplexVector):
            return NotImplemented
        return np.array_equal(self.re, other.re) and np.array_equal(self.im, other.im)


@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """Complex ``L x N`` measurement (pilot) matrix held as ``(Re A, Im A)``."""

    a_re: np.ndarray
    a_im: np.ndarray

    def __post_init__(self):
        a_re, a_im = _frozen(self.a_re), _frozen(self.a_im)
        if a_re.ndim != 2 or a_re.shape != a_im.shape:
            raise ValueError(
                "a_re and a_im must be 2-D arrays of equal shape, got "
                f"{a_re.shape} and {a_im.shape}"
            )
        object.__setattr__(self, "a_re", a_re)
        object.__setattr__(self, "a_im", a_im)

    @classmethod
    def from_complex(cls, A) -> "MeasurementMatrix":
        A = np.asarray(A, dtype=np.complex128)
        return cls(A.real, A.imag)

    def to_complex(self) -> np.ndarray:
        return self.a_re + 1j * self.a_im

    @property
    def L(self) -> int:
        return self.a_re.shape[0]

    @property
    def N(self) -> int:
        return self.a_re.shape[1]

    def column_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.a_re**2 + self.a_im**2, axis=0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MeasurementMatrix):
            return NotImplemented
        return np.array_equal(self.a_re, other.a_re) and np.array_equal(
            self.a_im, other.a_im
        )


def complex_matvec(A: MeasurementMatrix, x: SplitComplexVector) -> SplitComplexVector:
    """Compute ``A x`` using only real arithmetic.

    ``Re(Ax) = Re(A)Re(x) - Im(A)Im(x)`` and ``Im(Ax) = Im(A)Re(x) + Re(A)Im(x)``.
    ``x`` may carry a leading batch axis, in which case the product is taken
    row by row.
    """
    if x.shape[-1] != A.N:
        raise ValueError(
            f"signal length {x.shape[-1]} does not match matrix width N={A.N}"
        )
    re = x.re @ A.a_re.T - x.im @ A.a_im.T
    im = x.re @ A.a_im.T + x.im @ A.a_re.T
    return SplitComplexVector(re, im)


def support_of(x: SplitComplexVector, tol: float = 0.0) -> np.ndarray:
    """Binary indicator of entries whose magnitude exceeds ``tol``."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return (x.magnitude() > tol).astype(np.int8)


@dataclass(frozen=True)
class Sample:
    x: SplitComplexVector
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.int8)
        if alpha.shape != self.x.shape:
            raise ValueError("alpha and x must have the same length")
        if not np.array_equal(alpha, support_of(self.x)):
            raise ValueError("alpha must mark exactly the non-zero entries of x")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True, eq=False)
class Dataset:
    """A batch of samples stored column-wise.

    ``x`` has shape ``(I, N)`` and ``alpha`` is the matching ``(I, N)`` int8
    support matrix.  Iterating yields :class:`Sample` objects.
    """

    x: SplitComplexVector
    alpha: np.ndarray
    role: str = "train"
    case_id: int = field(default=0)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if len(self.x.shape) != 2:
            raise ValueError("Dataset.x must be a 2-D batch of signals")
        alpha = np.asarray(self.alpha, dtype=np.int8)
        if alpha.shape != self.x.shape:
            raise ValueError("alpha and x must have the same shape")
        if not np.array_equal(alpha, support_of(self.x)):
            raise ValueError("alpha must mark exactly the non-zero entries of x")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], role: str = "train",
                     case_id: int = 0) -> "Dataset":
        if not samples:
            raise ValueError("cannot build a Dataset from zero samples")
        n = {s.alpha.shape[0] for s in samples}
        if len(n) != 1:
            raise ValueError("all samples must share the same N")
        re = np.stack([s.x.re for s in samples])
        im = np.stack([s.x.im for s in samples])
        alpha = np.stack([s.alpha for s in samples])
        return cls(SplitComplexVector(re, im), alpha, role, case_id)

    @property
    def N(self) -> int:
        return self.x.shape[1]

    def __len__(self) -> int:
        return self.x.shape[0]

    def __getitem__(self, i: int) -> Sample:
        return Sample(self.x[i], self.alpha[i])

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self[i]

    @property
    def samples(self) -> list:
        return list(self)

    def signals(self) -> np.ndarray:
        """Signals as a complex ``(I, N)`` array."""
        return self.x.to_complex()

    def fingerprint(self) -> str:
        """Short content hash used to show that methods saw the same data."""
        import hashlib

        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.x.re).tobytes())
        h.update(np.ascontiguousarray(self.x.im).tobytes())
        h.update(np.ascontiguousarray(self.alpha).tobytes())
        return h.hexdigest()[:16]
