"""Complex sparse-recovery solvers used as reference detectors.

All solvers accept one measurement vector ``y`` of shape ``(L,)`` or a batch
``(I, L)`` and solve every row independently against the same matrix.
Per-sample stopping is respected inside a batch: a row that has converged
is frozen while the others keep iterating.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import MeasurementMatrix, SplitComplexVector
from ..exceptions import ConfigError

__all__ = [
    "LassoConfig",
    "AmpConfig",
    "GroupSpec",
    "SolverResult",
    "csoft",
    "group_shrink",
    "sgl_objective",
    "lasso_solve",
    "group_lasso_solve",
    "sparse_group_lasso_solve",
    "amp_solve",
]


@dataclass(frozen=True)
class LassoConfig:
    lam: float = 0.1
    max_iters: int = 1000
    tol: float = 1e-6
    lambda_grid: tuple = tuple(np.geomspace(0.01, 1.0, 20))

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError("lambda must be non-negative")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")


@dataclass(frozen=True)
class GroupSpec:
    """Contiguous equal-size groups: device ``n`` belongs to group ``n // group_size``."""

    group_size: int
    group_count: int

    def __post_init__(self):
        if self.group_size < 1 or self.group_count < 1:
            raise ConfigError("group_size and group_count must be positive")

    @classmethod
    def for_n(cls, N: int, group_size: int) -> "GroupSpec":
        if N % group_size:
            raise ConfigError(f"group_size={group_size} does not divide N={N}")
        return cls(group_size, N // group_size)

    @property
    def N(self) -> int:
        return self.group_size * self.group_count

    @property
    def assignment(self) -> np.ndarray:
        return np.arange(self.N) // self.group_size

    def slices(self):
        s = self.group_size
        return [slice(g * s, (g + 1) * s) for g in range(self.group_count)]


@dataclass(frozen=True)
class AmpConfig:
    max_iters: int = 200
    damping: float = 0.0
    theta: float = 1.1
    tol: float = 1e-6

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if not 0.0 <= self.damping < 1.0:
            raise ConfigError("damping must lie in [0, 1)")
        if not self.theta > 0:
            raise ConfigError("theta must be positive")


@dataclass
class SolverResult:
    """Estimate ``x`` (complex, same batch layout as the input) and per-row status."""

    x: np.ndarray
    converged: np.ndarray
    n_iter: np.ndarray
    objective_trace: list = field(default_factory=list)
    diverged: np.ndarray | None = None

    @property
    def split(self) -> SplitComplexVector:
        return SplitComplexVector.from_complex(self.x)


def _as_complex_matrix(A) -> np.ndarray:
    if isinstance(A, MeasurementMatrix):
        return A.to_complex()
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2:
        raise ValueError("measurement matrix must be 2-D")
    return A


def _as_batch(A, y):
    if isinstance(y, SplitComplexVector):
        y = y.to_complex()
    y = np.asarray(y, dtype=np.complex128)
    single = y.ndim == 1
    Y = y[None, :] if single else y
    if Y.ndim != 2 or Y.shape[1] != A.shape[0]:
        raise ValueError(f"measurements of shape {y.shape} do not match L={A.shape[0]}")
    return Y, single


def _unbatch(res: SolverResult, single: bool) -> SolverResult:
    if single:
        res.x = res.x[0]
        res.converged = bool(res.converged[0])
        res.n_iter = int(res.n_iter[0])
        if res.diverged is not None:
            res.diverged = bool(res.diverged[0])
        res.objective_trace = [float(v[0]) for v in res.objective_trace]
    return res


def csoft(z, t):
    """Complex soft threshold: shrink the magnitude by ``t``, keep the phase."""
    mag = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(mag > t, 1.0 - t / mag, 0.0)
    return z * scale


def group_shrink(V, t):
    """Vector soft threshold applied to each row of ``V``."""
    norm = np.linalg.norm(V, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norm > t, 1.0 - t / norm, 0.0)
    return V * scale


def sgl_objective(A, Y, X, groups: GroupSpec | None, lam1, lam2) -> np.ndarray:
    """``1/2 ||y - Ax||^2 + lam1 sum|x_n| + lam2 sum_g sqrt(s) ||x_g||`` per row."""
    A = _as_complex_matrix(A)
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    R = Y - X @ A.T
    obj = 0.5 * np.sum(np.abs(R) ** 2, axis=1) + lam1 * np.sum(np.abs(X), axis=1)
    if lam2 and groups is not None:
        s = groups.group_size
        Xg = X.reshape(len(X), groups.group_count, s)
        obj = obj + lam2 * np.sqrt(s) * np.sum(np.linalg.norm(Xg, axis=2), axis=1)
    return obj


def _block_cd(A, Y, group_size, lam1, lam2, max_iters, tol, track_objective=False, x0=None):
    """Cyclic block coordinate descent for the sparse-group penalty.

    Each block takes one proximal-gradient step with step size ``1 / ||A_g||_2^2``
    and the exact proximal map of the block penalty (soft threshold, then
    group shrinkage).  For single-column blocks this is the exact coordinate
    minimiser, i.e. plain coordinate descent.
    """
    I, L = Y.shape
    N = A.shape[1]
    s = group_size
    blocks = [slice(g * s, (g + 1) * s) for g in range(N // s)]
    Ab = [A[:, b] for b in blocks]
    Abc = [a.conj() for a in Ab]
    lip = [float(np.linalg.norm(a, 2) ** 2) for a in Ab]
    if min(lip) == 0:
        raise ValueError("measurement matrix has a zero column")
    gpen = lam2 * np.sqrt(s)

    if x0 is None:
        X = np.zeros((I, N), dtype=np.complex128)
        R = Y.copy()
    else:
        X = np.array(np.broadcast_to(x0, (I, N)), dtype=np.complex128)
        R = Y - X @ A.T
    converged = np.zeros(I, dtype=bool)
    n_iter = np.zeros(I, dtype=np.int64)
    groups = GroupSpec(s, N // s)
    trace = [sgl_objective(A, Y, X, groups, lam1, lam2)] if track_objective else []

    active = np.arange(I)
    for it in range(1, max_iters + 1):
        Xa, Ra = X[active], R[active]
        delta = np.zeros(len(active))
        for b, a, ac, c in zip(blocks, Ab, Abc, lip):
            old = Xa[:, b]
            V = old + (Ra @ ac) / c
            new = csoft(V, lam1 / c) if lam1 else V
            if lam2:
                new = group_shrink(new, gpen / c)
            d = new - old
            if np.any(d):
                Ra -= d @ a.T
                Xa[:, b] = new
                delta = np.maximum(delta, np.max(np.abs(d), axis=1))
        X[active], R[active] = Xa, Ra
        n_iter[active] = it
        if track_objective:
            trace.append(sgl_objective(A, Y, X, groups, lam1, lam2))
        done = delta < tol
        converged[active[done]] = True
        active = active[~done]
        if active.size == 0:
            break
    return SolverResult(X, converged, n_iter, trace)


def lasso_solve(A, y, cfg: LassoConfig = LassoConfig(), track_objective=False,
                x0=None) -> SolverResult:
    """Complex LASSO, ``min 1/2 ||y - Ax||^2 + lam sum_n |x_n|``, by cyclic coordinate descent.

    ``x0`` is an optional warm start with the same layout as the solution.
    """
    A = _as_complex_matrix(A)
    Y, single = _as_batch(A, y)
    res = _block_cd(A, Y, 1, cfg.lam, 0.0, cfg.max_iters, cfg.tol, track_objective, x0)
    return _unbatch(res, single)


def group_lasso_solve(A, y, spec: GroupSpec, lam: float, max_iters=1000, tol=1e-6,
                      track_objective=False, x0=None) -> SolverResult:
    """Group LASSO with penalty ``lam * sum_g sqrt(group_size) ||x_g||_2``."""
    return sparse_group_lasso_solve(A, y, spec, 0.0, lam, max_iters, tol, track_objective, x0)


def sparse_group_lasso_solve(A, y, spec: GroupSpec, lam1: float, lam2: float,
                             max_iters=1000, tol=1e-6, track_objective=False,
                             x0=None) -> SolverResult:
    """Sparse group LASSO: ``l1`` weight ``lam1`` plus group weight ``lam2``."""
    if lam1 < 0 or lam2 < 0:
        raise ConfigError("lambda values must be non-negative")
    A = _as_complex_matrix(A)
    if spec.N != A.shape[1]:
        raise ConfigError(f"group spec covers {spec.N} devices, matrix has {A.shape[1]}")
    Y, single = _as_batch(A, y)
    res = _block_cd(A, Y, spec.group_size, lam1, lam2, max_iters, tol, track_objective, x0)
    return _unbatch(res, single)


def amp_solve(A, y, cfg: AmpConfig = AmpConfig()) -> SolverResult:
    """Complex AMP with a soft-threshold denoiser.

    Columns are normalised to unit norm for the iteration and the estimate is
    mapped back to the original column scaling on return.  The threshold at
    step ``t`` is ``theta * ||r_t|| / sqrt(L)``.  For complex soft
    thresholding the Onsager coefficient uses the average of
    ``1 - tau / (2|u|)`` over the surviving entries.
    """
    A = _as_complex_matrix(A)
    Y, single = _as_batch(A, y)
    L, N = A.shape
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("measurement matrix has a zero column")
    An = A / norms
    Anc = An.conj()
    I = len(Y)

    X = np.zeros((I, N), dtype=np.complex128)
    R = Y.copy()
    y_norm = np.linalg.norm(Y, axis=1)
    converged = np.zeros(I, dtype=bool)
    diverged = np.zeros(I, dtype=bool)
    n_iter = np.zeros(I, dtype=np.int64)
    active = np.arange(I)
    # Zero measurements are an exact fixed point.
    zero = y_norm == 0
    converged[zero] = True
    active = active[~zero]

    for it in range(1, cfg.max_iters + 1):
        if active.size == 0:
            break
        Xa, Ra = X[active], R[active]
        U = Xa + Ra @ Anc
        tau = cfg.theta * np.linalg.norm(Ra, axis=1, keepdims=True) / np.sqrt(L)
        Xn = csoft(U, tau)
        if cfg.damping:
            Xn = (1.0 - cfg.damping) * Xn + cfg.damping * Xa
        mag = np.abs(U)
        with np.errstate(divide="ignore", invalid="ignore"):
            deriv = np.where(mag > tau, 1.0 - tau / (2.0 * mag), 0.0)
        onsager = (N / L) * deriv.mean(axis=1, keepdims=True)
        Rn = Y[active] - Xn @ An.T + onsager * Ra
        change = np.linalg.norm(Rn - Ra, axis=1) / np.maximum(y_norm[active], 1e-300)
        X[active], R[active] = Xn, Rn
        n_iter[active] = it
        blown = np.linalg.norm(Rn, axis=1) > 10.0 * y_norm[active]
        diverged[active[blown]] = True
        done = (change < cfg.tol) & ~blown
        converged[active[done]] = True
        active = active[~(done | blown)]

    res = SolverResult(X / norms, converged, n_iter, [], diverged)
    return _unbatch(res, single)
