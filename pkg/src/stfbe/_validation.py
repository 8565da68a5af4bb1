"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

import numbers

import numpy as np

from .exceptions import DomainError


def check_finite_array(values, name="values", ndim=None, min_length=None):
    """Return ``values`` as a float64 array after checking it is finite."""
    arr = np.asarray(values, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if min_length is not None and arr.shape[0] < min_length:
        raise ValueError(f"{name} needs at least {min_length} samples, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_scalar(x, name, *, lower=None, upper=None, lower_inclusive=True,
                 upper_inclusive=True, error=DomainError):
    """Validate a real scalar against an interval and return it as ``float``."""
    if isinstance(x, bool) or not isinstance(x, (numbers.Real, np.floating, np.integer)):
        raise TypeError(f"{name} must be a real number, got {type(x).__name__}")
    x = float(x)
    if not np.isfinite(x):
        raise error(f"{name} must be finite, got {x}")
    if lower is not None:
        bad = x < lower if lower_inclusive else x <= lower
        if bad:
            op = ">=" if lower_inclusive else ">"
            raise error(f"{name} must be {op} {lower}, got {x}")
    if upper is not None:
        bad = x > upper if upper_inclusive else x >= upper
        if bad:
            op = "<=" if upper_inclusive else "<"
            raise error(f"{name} must be {op} {upper}, got {x}")
    return x


def check_power_of_two(n, name):
    if isinstance(n, bool) or not isinstance(n, (numbers.Integral, np.integer)) or n < 2 or n & (n - 1):
        raise ValueError(f"{name} must be a power of two >= 2, got {n!r}")
    return int(n)
