import math
from typing import Any, Tuple

import numpy as np


def check_finite(value: Any, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError("{} must be finite, got {}".format(name, value))
    return value


def check_positive(value: Any, name: str) -> float:
    value = check_finite(value, name)
    if value <= 0.0:
        raise ValueError("{} must be > 0, got {}".format(name, value))
    return value


def check_nonnegative(value: Any, name: str) -> float:
    value = check_finite(value, name)
    if value < 0.0:
        raise ValueError("{} must be >= 0, got {}".format(name, value))
    return value


def check_fraction(
    value: Any, name: str, low_open: bool = False, high_open: bool = False
) -> float:
    """Checks ``value`` lies in the unit interval with optionally open ends."""
    value = check_finite(value, name)
    low_ok = value > 0.0 if low_open else value >= 0.0
    high_ok = value < 1.0 if high_open else value <= 1.0
    if not (low_ok and high_ok):
        interval = "{}0, 1{}".format(
            "(" if low_open else "[", ")" if high_open else "]"
        )
        raise ValueError("{} must be in {}, got {}".format(name, interval, value))
    return value


def check_point(p: Any, name: str = "point") -> Tuple[float, float]:
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape != (2,):
        raise ValueError(
            "{} must be a pair of coordinates, got shape {}".format(name, arr.shape)
        )
    if not np.isfinite(arr).all():
        raise ValueError("{} contains NaN or inf: {}".format(name, tuple(arr)))
    return (float(arr[0]), float(arr[1]))


def check_n_jobs(n_jobs: Any) -> int:
    n_jobs = int(n_jobs)
    if n_jobs == 0:
        raise ValueError("n_jobs must be nonzero")
    return n_jobs
