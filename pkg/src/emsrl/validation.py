"""Input validation helpers used by constructors and the config loader.

All helpers raise :class:`~emsrl.errors.ConfigError` with the offending key
name in the message, so CLI error output can point at the bad field.
"""

import math

import numpy as np

from .errors import ConfigError


def check_finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(name, value):
    value = check_finite(name, value)
    if value <= 0:
        raise ConfigError(f"{name} must be > 0, got {value!r}")
    return value


def check_non_negative(name, value):
    value = check_finite(name, value)
    if value < 0:
        raise ConfigError(f"{name} must be >= 0, got {value!r}")
    return value


def check_in_range(name, value, lo, hi, lo_open=False, hi_open=False):
    value = check_finite(name, value)
    if (value < lo or value > hi
            or (lo_open and value == lo) or (hi_open and value == hi)):
        lo_b = "(" if lo_open else "["
        hi_b = ")" if hi_open else "]"
        raise ConfigError(f"{name} must lie in {lo_b}{lo}, {hi}{hi_b}, got {value!r}")
    return value


def check_fraction(name, value):
    return check_in_range(name, value, 0.0, 1.0)


def check_count(name, value, minimum=0):
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_choice(name, value, choices):
    if value not in choices:
        raise ConfigError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value


def check_strictly_increasing(name, values):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ConfigError(f"{name} must be a 1-D sequence of length >= 2")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be finite")
    if not np.all(np.diff(arr) > 0):
        raise ConfigError(f"{name} must be strictly increasing")
    return arr
