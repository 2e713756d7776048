"""Sample generators for the three device-activity models.

* ``IID`` - every device active independently with probability ``p``.
* ``TWO_GROUP`` - first half of the devices active with ``p1``, second half
  with ``p2``, where ``(p1 + p2) / 2 = p`` and ``p1 / p2 = ratio_p1_p2``.
* ``GROUP_CORRELATED`` - devices split into ``group_count`` contiguous blocks;
  a block is switched on with probability ``p_g = p / p_u`` and each device of
  a switched-on block is then active with probability ``p_u``.

Channels are Rayleigh, ``h_n ~ CN(0, 1)``, and the signal is ``x_n = alpha_n h_n``.
"""
from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import ROLES, Dataset, Sample, SplitComplexVector
from .exceptions import ConfigError, FormatError

__all__ = [
    "Case",
    "ScenarioConfig",
    "DESK_SIZES",
    "PAPER_SIZES",
    "gen_activity",
    "gen_channel",
    "gen_sample",
    "gen_noise",
    "gen_dataset",
    "build_datasets",
    "role_rng",
    "save_dataset",
    "load_dataset",
]


class Case(enum.IntEnum):
    IID = 1
    TWO_GROUP = 2
    GROUP_CORRELATED = 3

    @classmethod
    def parse(cls, value) -> "Case":
        if isinstance(value, Case):
            return value
        if isinstance(value, str):
            key = value.strip().upper().replace("-", "_")
            aliases = {"TWOGROUP": "TWO_GROUP", "GROUPCORRELATED": "GROUP_CORRELATED"}
            key = aliases.get(key, key)
            if key.isdigit():
                return cls(int(key))
            try:
                return cls[key]
            except KeyError:
                raise ConfigError(f"unknown case {value!r}") from None
        return cls(int(value))


# Sample counts (train, validation, test).
DESK_SIZES = {"train": 50_000, "validation": 5_000, "test": 10_000}
PAPER_SIZES = {
    Case.IID: {"train": 450_000, "validation": 50_000, "test": 10_000},
    Case.TWO_GROUP: {"train": 450_000, "validation": 50_000, "test": 10_000},
    Case.GROUP_CORRELATED: {"train": 90_000, "validation": 10_000, "test": 100_000},
}


@dataclass(frozen=True)
class ScenarioConfig:
    N: int = 40
    L: int = 12
    case: Case = Case.IID
    p: float = 0.1
    ratio_p1_p2: float = 1.0
    p_u: float = 1.0
    group_count: int = 1
    sigma2: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "case", Case.parse(self.case))
        self.validate()

    def validate(self):
        if self.N < 1 or self.L < 1:
            raise ConfigError("N and L must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must lie in [0, 1], got {self.p}")
        if not self.sigma2 > 0:
            raise ConfigError(f"sigma2 must be positive, got {self.sigma2}")
        if self.case is Case.TWO_GROUP:
            if self.N % 2:
                raise ConfigError("TWO_GROUP needs an even number of devices")
            if not self.ratio_p1_p2 > 0:
                raise ConfigError("ratio_p1_p2 must be positive")
            p1, p2 = self.group_probabilities
            if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
                raise ConfigError(
                    f"p={self.p}, ratio={self.ratio_p1_p2} give p1={p1:.4g}, "
                    f"p2={p2:.4g}; both must lie in [0, 1]"
                )
        if self.case is Case.GROUP_CORRELATED:
            if self.group_count < 1 or self.N % self.group_count:
                raise ConfigError(
                    f"group_count={self.group_count} must divide N={self.N}"
                )
            if not 0.0 <= self.p_u <= 1.0:
                raise ConfigError(f"p_u must lie in [0, 1], got {self.p_u}")
            if self.p_u == 0.0:
                if self.p != 0.0:
                    raise ConfigError("p_u = 0 only admits p = 0")
            elif not 0.0 <= self.p_g <= 1.0:
                raise ConfigError(
                    f"p_g = p / p_u = {self.p_g:.4g} must lie in [0, 1]"
                )

    @property
    def group_probabilities(self) -> tuple:
        """``(p1, p2)`` for the two-group model."""
        r = self.ratio_p1_p2
        return 2 * self.p * r / (1 + r), 2 * self.p / (1 + r)

    @property
    def p_g(self) -> float:
        return 0.0 if self.p_u == 0 else self.p / self.p_u

    @property
    def group_size(self) -> int:
        if self.case is Case.GROUP_CORRELATED:
            return self.N // self.group_count
        if self.case is Case.TWO_GROUP:
            return self.N // 2
        return self.N

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def gen_activity(cfg: ScenarioConfig, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw activity indicators, shape ``(N,)`` or ``(size, N)``."""
    cfg.validate()
    shape = (cfg.N,) if size is None else (size, cfg.N)
    if cfg.case is Case.IID:
        alpha = rng.random(shape) < cfg.p
    elif cfg.case is Case.TWO_GROUP:
        p1, p2 = cfg.group_probabilities
        probs = np.repeat([p1, p2], cfg.N // 2)
        alpha = rng.random(shape) < probs
    else:
        gshape = shape[:-1] + (cfg.group_count,)
        xi = rng.random(gshape) < cfg.p_g
        within = rng.random(shape) < cfg.p_u
        alpha = np.repeat(xi, cfg.group_size, axis=-1) & within
    return alpha.astype(np.int8)


def gen_channel(N: int, rng: np.random.Generator, size=None) -> SplitComplexVector:
    """Rayleigh channels ``CN(0, 1)``: real and imaginary parts ``N(0, 1/2)``."""
    if N < 1:
        raise ConfigError("N must be at least 1")
    shape = (N,) if size is None else (size, N)
    s = np.sqrt(0.5)
    return SplitComplexVector(rng.normal(0.0, s, shape), rng.normal(0.0, s, shape))


def _mask(alpha, h):
    return SplitComplexVector(alpha * h.re, alpha * h.im)


def gen_sample(cfg: ScenarioConfig, rng: np.random.Generator) -> Sample:
    alpha = gen_activity(cfg, rng)
    h = gen_channel(cfg.N, rng)
    return Sample(_mask(alpha, h), alpha)


def gen_noise(L: int, sigma2: float, rng: np.random.Generator, size=None) -> SplitComplexVector:
    """AWGN ``CN(0, sigma2 I_L)``; each real component has variance ``sigma2 / 2``."""
    if not sigma2 > 0:
        raise ConfigError(f"sigma2 must be positive, got {sigma2}")
    shape = (L,) if size is None else (size, L)
    s = np.sqrt(sigma2 / 2)
    return SplitComplexVector(rng.normal(0.0, s, shape), rng.normal(0.0, s, shape))


def gen_dataset(cfg: ScenarioConfig, rng: np.random.Generator, count: int,
                role: str = "train") -> Dataset:
    """Vectorised equivalent of ``count`` calls to :func:`gen_sample`."""
    if count < 1:
        raise ConfigError("dataset size must be positive")
    alpha = gen_activity(cfg, rng, size=count)
    h = gen_channel(cfg.N, rng, size=count)
    return Dataset(_mask(alpha, h), alpha, role=role, case_id=int(cfg.case))


def role_rng(seed: int, role: str) -> np.random.Generator:
    """Independent generator for one (seed, role) pair.

    The role tag is folded into the seed entropy, so the train, validation
    and test streams never overlap by construction.
    """
    tag = zlib.crc32(role.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, tag]))


def build_datasets(cfg: ScenarioConfig, sizes=None) -> dict:
    sizes = dict(DESK_SIZES if sizes is None else sizes)
    out = {}
    for role in ROLES:
        n = int(sizes[role])
        if n < 1:
            raise ConfigError(f"size for {role} must be positive")
        out[role] = gen_dataset(cfg, role_rng(cfg.seed, role), n, role=role)
    return out


# ---------------------------------------------------------------------------
# .ssup files: "SSUP1" | N, count, case (u32 LE) | count x (N x (re, im) f64 LE, N x u8)

_MAGIC = b"SSUP1"
_HEADER = struct.Struct("<5sIII")


def _record_dtype(N):
    return np.dtype([("x", "<f8", (N, 2)), ("alpha", "u1", (N,))])


def save_dataset(path, ds: Dataset) -> None:
    rec = np.empty(len(ds), dtype=_record_dtype(ds.N))
    rec["x"][..., 0] = ds.x.re
    rec["x"][..., 1] = ds.x.im
    rec["alpha"] = ds.alpha
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, ds.N, len(ds), int(ds.case_id)))
        fh.write(rec.tobytes())


def load_dataset(path, role: str = "test") -> Dataset:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("file shorter than header", field="header")
    magic, N, count, case_id = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise FormatError(f"bad magic {magic!r}", field="magic")
    if N < 1:
        raise FormatError("N must be positive", field="N")
    dt = _record_dtype(N)
    body = raw[_HEADER.size:]
    if len(body) != count * dt.itemsize:
        raise FormatError(
            f"expected {count * dt.itemsize} payload bytes, found {len(body)}",
            field="records",
        )
    rec = np.frombuffer(body, dtype=dt, count=count)
    x = SplitComplexVector(rec["x"][..., 0], rec["x"][..., 1])
    alpha = rec["alpha"]
    if not np.all(alpha <= 1):
        raise FormatError("activity bytes must be 0 or 1", field="alpha")
    return Dataset(x, alpha.astype(np.int8), role=role, case_id=case_id)
