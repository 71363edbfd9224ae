"""Input validation helpers and the exception types raised across the package."""

from __future__ import annotations

import numbers

import numpy as np


class InputError(ValueError):
    """Raised when arguments violate a documented precondition."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails to reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConsistencyError(RuntimeError):
    """Raised when two independent computations of one quantity disagree."""


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InputError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_finite_array(values, name):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite values")
    return arr


def check_grid_size(n):
    if not isinstance(n, numbers.Integral):
        raise InputError(f"grid size must be an integer, got {n!r}")
    n = int(n)
    if n < 16 or n & (n - 1):
        raise InputError(f"grid size must be a power of two >= 16, got {n}")
    return n


def check_integer(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise InputError(f"{name} must be an integer, got {value!r}")
    return int(value)


def check_signs(signs):
    arr = np.asarray(signs, dtype=float).ravel()
    if arr.size == 0 or not np.all(np.isin(arr, (-1.0, 1.0))):
        raise InputError(f"signs must be a non-empty sequence of +1/-1, got {signs!r}")
    return arr
