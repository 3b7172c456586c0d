"""Input validation helpers shared by the public API."""
from __future__ import annotations

import numbers

import numpy as np

from .exceptions import DimensionError, InvalidExponentError


def check_exponent(p, name="p") -> float:
    if isinstance(p, bool) or not isinstance(p, numbers.Real):
        raise InvalidExponentError(f"{name} must be a real number, got {p!r}")
    p = float(p)
    if not (np.isfinite(p) and p > 1.0):
        raise InvalidExponentError(f"{name} must be a finite real > 1, got {p}")
    return p


def check_positive(value, name) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a finite positive number, got {value}")
    return value


def check_count(value, name, minimum=1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_side(f, side):
    if f.side is not side:
        raise DimensionError(f"expected a {side.value} function, got a {f.side.value} one")
    return f


def check_same_grid(*functions):
    first = functions[0].grid
    for f in functions[1:]:
        if f.grid != first:
            raise DimensionError("grid functions are defined on different grids")
    return first


def check_values(values, size, name="values") -> np.ndarray:
    """Return ``values`` as a float array whose last axis has length ``size``."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 0 or values.shape[-1] != size:
        raise DimensionError(f"{name} must have last dimension {size}, got shape {values.shape}")
    return values
