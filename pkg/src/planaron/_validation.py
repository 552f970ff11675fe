"""Input validation helpers used by the estimators and data containers."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DomainError, SchemaError


def as_1d(x, name="input"):
    try:
        arr = check_array(np.asarray(x, dtype=float).reshape(-1, 1), ensure_all_finite=True)
    except ValueError as exc:
        raise SchemaError(f"{name}: {exc}") from None
    return arr.ravel()


def check_series(x, y, xname="x", yname="y"):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape or x.ndim != 1:
        raise SchemaError(f"{xname} and {yname} must be 1-D arrays of equal length")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise SchemaError(f"{xname}/{yname} contain NaN or inf")


def check_increasing(x, name="x"):
    x = np.asarray(x)
    bad = np.nonzero(np.diff(x) <= 0)[0]
    if bad.size:
        i = int(bad[0]) + 1
        raise SchemaError(f"{name} must be strictly increasing; violated at index {i} ({x[i]!r})")


def check_positive(value, name):
    if not np.all(np.asarray(value) > 0):
        raise DomainError(f"{name} must be positive")
    return value
