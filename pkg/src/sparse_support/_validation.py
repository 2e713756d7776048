"""Input checks shared by the estimators.

scikit-learn's ``check_array`` refuses complex input, so complex arrays are
validated here instead.
"""
import numbers

import numpy as np


def check_complex_array(X, *, name="X", ndim=2, n_features=None):
    """Return ``X`` as a finite complex128 array with ``ndim`` dimensions.

    A 1-D input is promoted to a single-row batch when ``ndim == 2``.
    """
    X = np.asarray(X)
    if X.dtype == object:
        raise ValueError(f"{name} has object dtype")
    X = X.astype(np.complex128, copy=False)
    if ndim == 2 and X.ndim == 1:
        X = X[None, :]
    if X.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinity")
    if n_features is not None and X.shape[-1] != n_features:
        raise ValueError(
            f"{name} has {X.shape[-1]} features per row, expected {n_features}"
        )
    return X


def check_binary(a, *, name="alpha"):
    a = np.asarray(a)
    if a.size and not np.all((a == 0) | (a == 1)):
        raise ValueError(f"{name} must contain only 0/1 entries")
    return a.astype(np.int8, copy=False)


def check_probability(value, name):
    if not isinstance(value, numbers.Real) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)
