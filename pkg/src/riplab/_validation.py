"""Input validation helpers shared across the package."""

import numbers

import numpy as np
from sklearn.utils import check_random_state as _sk_check_random_state


def as_signal(x, size=None, name="x"):
    """Return ``x`` as a flat complex128 array, optionally checking its length.

    Matrix (n, n) and tensor (n, ..., n) views are flattened in C order, which
    is the convention used by every group action in this package.
    """
    arr = np.asarray(x)
    if arr.dtype == object:
        raise TypeError(f"{name} must be numeric")
    arr = np.ascontiguousarray(arr, dtype=np.complex128).reshape(-1)
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} has {arr.shape[0]} entries, expected {size}")
    return arr


def as_batch(X, size, name="X"):
    """Return ``X`` as a 2-D complex array of shape (n_samples, size)."""
    arr = np.asarray(X, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[None, :]
    arr = arr.reshape(arr.shape[0], -1)
    if arr.shape[1] != size:
        raise ValueError(f"{name} has {arr.shape[1]} features, expected {size}")
    return arr


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_interval(value, name, low=None, high=None, low_open=False, high_open=False):
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite")
    if low is not None and (value < low or (low_open and value == low)):
        raise ValueError(f"{name}={value} out of range")
    if high is not None and (value > high or (high_open and value == high)):
        raise ValueError(f"{name}={value} out of range")
    return value


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`.

    Accepts ``None``, an int, a ``SeedSequence``, a ``Generator`` or a legacy
    ``RandomState`` (which is wrapped through its bit generator).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    rs = _sk_check_random_state(seed)
    return np.random.Generator(rs._bit_generator)
