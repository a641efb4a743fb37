"""Synthetic processes with known causal structure, used for validation.

Randomness comes from ``numpy.random.Generator`` (PCG64). Each noise
series gets its own child stream from ``SeedSequence(seed).spawn(...)``, so
series are independent and reproducible per seed on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, datetime, timedelta

import numpy as np

from .errors import DomainError
from .ingest import RawSeries, Region

BURN_IN = 100


@dataclass(frozen=True)
class SynthSpec:
    n_samples: int = 2000
    seed: int = 0
    network: str = "paper_test"
    a: float = 1.0
    sigma_w: float = 1.0

    def __post_init__(self):
        if self.n_samples < 100:
            raise ValueError("n_samples must be >= 100")
        if self.network not in ("paper_test", "gaussian_lag", "iid_pair"):
            raise ValueError(f"unknown network {self.network!r}")


def _streams(seed: int, count: int, length: int) -> np.ndarray:
    children = np.random.SeedSequence(seed).spawn(count)
    return np.stack([np.random.default_rng(c).standard_normal(length) for c in children])


def gen_test_network(spec: SynthSpec, noise: np.ndarray | None = None) -> np.ndarray:
    """Four-node non-linear network; returns an array of shape ``(4, n_samples)``.

    ``X1 = W1``, ``X2[n] = X1[n-1]^2 + X1[n-2]^2 + W2[n]``,
    ``X3[n] = X2[n-1] + W3[n]``, ``X4[n] = X1[n-2] + W4[n]``.
    Row ``i`` is ``X(i+1)``. ``noise`` overrides the ``(4, n_samples + BURN_IN)``
    innovation matrix.
    """
    total = spec.n_samples + BURN_IN
    w = _streams(spec.seed, 4, total) if noise is None else np.asarray(noise, dtype=float)
    if w.shape != (4, total):
        raise ValueError(f"noise must have shape (4, {total})")
    x = w.copy()  # first two samples of every series stay pure noise
    for n in range(2, total):
        x[1, n] = x[0, n - 1] ** 2 + x[0, n - 2] ** 2 + w[1, n]
        x[2, n] = x[1, n - 1] + w[2, n]
        x[3, n] = x[0, n - 2] + w[3, n]
    return x[:, BURN_IN:]


def gen_gaussian_lag(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """``src`` i.i.d. N(0, 1); ``dst[n] = a * src[n-1] + w[n]`` with ``w ~ N(0, sigma_w^2)``."""
    total = spec.n_samples + BURN_IN
    s, w = _streams(spec.seed, 2, total)
    d = spec.sigma_w * w
    d[1:] += spec.a * s[:-1]
    return s[BURN_IN:], d[BURN_IN:]


def gen_iid_pair(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    s, d = _streams(spec.seed, 2, spec.n_samples)
    return s, d


def generate(spec: SynthSpec) -> np.ndarray:
    """Dispatch on ``spec.network``; always returns a 2-D array of series."""
    if spec.network == "paper_test":
        return gen_test_network(spec)
    if spec.network == "gaussian_lag":
        return np.stack(gen_gaussian_lag(spec))
    return np.stack(gen_iid_pair(spec))


def analytic_gaussian_di(a: float, sigma_w: float) -> float:
    """DI rate of the unit-variance Gaussian lag channel: ``0.5 * ln(1 + a^2 / sigma_w^2)``."""
    if not sigma_w > 0:
        raise DomainError("sigma_w must be positive")
    return 0.5 * float(np.log1p(a * a / (sigma_w * sigma_w)))


def to_prices(x: np.ndarray, base: float = 100.0) -> np.ndarray:
    """Integrate a stationary sequence into a positive price path.

    The increments of the returned path reproduce ``x`` up to rounding.
    """
    path = np.concatenate([[0.0], np.cumsum(x)])
    return path - path.min() + base


def synthetic_keys(n: int, start: date = date(2000, 1, 3), freq: str = "day") -> list:
    """Consecutive time keys: calendar days, or minutes from 09:00 for ``freq='minute'``."""
    if freq == "day":
        return [start + timedelta(days=i) for i in range(n)]
    if freq == "minute":
        t0 = datetime(start.year, start.month, start.day, 9, 0)
        return [t0 + timedelta(minutes=i) for i in range(n)]
    raise ValueError(f"unknown frequency {freq!r}")


def as_raw_series(x: np.ndarray, labels=None, region: Region = Region.OTHER, keys=None) -> list[RawSeries]:
    """Wrap synthetic sequences as price series whose increments equal ``x``."""
    x = np.atleast_2d(x)
    labels = labels or [str(i + 1) for i in range(len(x))]
    keys = keys if keys is not None else synthetic_keys(x.shape[1] + 1)
    return [RawSeries(str(lab), region, list(keys), to_prices(row)) for lab, row in zip(labels, x)]
