"""Small argument checks shared by the public entry points."""

import math
import numbers

import numpy as np


def check_real(value, name, *, low=None, high=None, low_open=False, high_open=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if low is not None:
        if (value <= low) if low_open else (value < low):
            bracket = "(" if low_open else "["
            raise ValueError(f"{name} must lie in {bracket}{low}, ...), got {value}")
    if high is not None:
        if (value >= high) if high_open else (value > high):
            bracket = ")" if high_open else "]"
            raise ValueError(f"{name} must lie in (..., {high}{bracket}, got {value}")
    return value


def check_int(value, name, *, low=None, high=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if low is not None and value < low:
        raise ValueError(f"{name} must be >= {low}, got {value}")
    if high is not None and value > high:
        raise ValueError(f"{name} must be <= {high}, got {value}")
    return value


def check_time_grid(times, name="time_grid", *, low=1.0):
    arr = np.asarray(times, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(np.diff(arr) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if low is not None and arr[0] < low:
        raise ValueError(f"{name} must start at or after {low}")
    return arr


def as_vectors(points, name):
    """Return ``points`` as a float array of shape (m, n) with n <= 3."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or not 1 <= arr.shape[1] <= 3:
        raise ValueError(f"{name} must have shape (m, n) with 1 <= n <= 3")
    return arr
