"""Stationarizing transforms and standardization."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DivisionByZero, TooShort


class Transform(str, Enum):
    INCREMENT = "increment"
    RETURN = "return"


@dataclass(frozen=True)
class StdSeries:
    """Zero-mean, unit-variance sequence derived from one raw series.

    ``degenerate`` is set when the transformed sequence was constant, in
    which case ``values`` is all zeros.
    """

    values: np.ndarray
    transform: Transform
    source_id: str = ""
    degenerate: bool = False

    def __len__(self) -> int:
        return len(self.values)


def _as_1d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("expected a 1-D sequence")
    if arr.size < 2:
        raise TooShort(f"need at least 2 samples, got {arr.size}")
    return arr


def increments(x) -> np.ndarray:
    """First differences ``x[n+1] - x[n]``."""
    return np.diff(_as_1d(x))


def returns(x) -> np.ndarray:
    """Relative first differences ``(x[n+1] - x[n]) / x[n]``."""
    arr = _as_1d(x)
    base = arr[:-1]
    if np.any(base == 0):
        raise DivisionByZero(f"zero price at index {int(np.flatnonzero(base == 0)[0])}")
    return np.diff(arr) / base


def standardize_flagged(x) -> tuple[np.ndarray, bool]:
    """Like :func:`standardize` but also returns the degenerate flag."""
    arr = _as_1d(x)
    centered = arr - arr.mean()
    sd = centered.std()  # population (ddof=0)
    if sd == 0 or sd <= 1e-14 * max(1.0, np.abs(arr).max()):
        return np.zeros_like(arr), True
    return centered / sd, False


def standardize(x) -> np.ndarray:
    """Remove the mean and scale to unit population variance.

    A constant input maps to zeros; use :func:`standardize_flagged` to
    detect that case.
    """
    return standardize_flagged(x)[0]


def transform(x, kind: Transform | str = Transform.INCREMENT) -> np.ndarray:
    kind = Transform(kind)
    if kind is Transform.INCREMENT:
        return increments(x)
    return returns(x)


def prepare(values, kind: Transform | str = Transform.INCREMENT, source_id: str = "") -> StdSeries:
    """Transform raw (aligned) prices and standardize the result."""
    kind = Transform(kind)
    out, degenerate = standardize_flagged(transform(values, kind))
    return StdSeries(out, kind, source_id, degenerate)
