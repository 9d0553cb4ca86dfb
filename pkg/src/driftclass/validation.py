"""Input checks shared by the estimators."""

import numbers

import numpy as np
from sklearn.utils.validation import check_array, column_or_1d

from .simulate import PathBatch


def check_paths(X, min_paths=1):
    """Return ``X`` as a finite float array of shape (n_paths, n_steps + 1).

    Accepts a :class:`PathBatch` or anything array-like.
    """
    if isinstance(X, PathBatch):
        X = X.x
    X = check_array(X, dtype=np.float64, ensure_min_samples=min_paths)
    if X.shape[1] < 2:
        raise ValueError(
            f"paths need at least two grid points, got shape {X.shape}"
        )
    return X


def check_labels(y, n_paths):
    """Return ``y`` as an int array of 0/1 labels of length ``n_paths``."""
    y = column_or_1d(y, warn=True)
    if y.shape[0] != n_paths:
        raise ValueError(f"got {y.shape[0]} labels for {n_paths} paths")
    y_int = np.asarray(y).astype(np.int64)
    if not np.array_equal(y_int, y) or np.any((y_int != 0) & (y_int != 1)):
        raise ValueError("labels must be 0 or 1")
    return y_int


def check_positive(name, value):
    if not isinstance(value, numbers.Real) or not value > 0:
        raise ValueError(f"{name} must be a positive real, got {value!r}")
    return float(value)


def check_interval(name, interval):
    try:
        lo, hi = (float(v) for v in interval)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a pair (A, B), got {interval!r}") from None
    if not lo < hi:
        raise ValueError(f"{name} must satisfy A < B, got {interval!r}")
    return lo, hi
