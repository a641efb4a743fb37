"""Pairwise directed-information rate estimation.

Under a Markov assumption of order ``M`` on the target, the DI rate from a
source ``s`` to a target ``d`` collapses to one conditional mutual
information,

    I(s[n-M..n-1]; d[n] | d[n-M..n-1]),

which is estimated with :func:`dirank.knn.estimate_cmi`. ``M`` is picked per
ordered pair from the leave-one-out k-NN prediction error of ``d[n]`` given
the joint past of both series: the smallest candidate whose mean squared
error is within ``order_tolerance`` standard errors of the best one. Plain
argmin over near-equal losses picks an order at random on memoryless data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.spatial import cKDTree

from .errors import TooShort
from .knn import estimate_cmi
from .preprocess import StdSeries, Transform


class PredictionMode(str, Enum):
    JOINT_PAST = "joint_past"
    TARGET_ONLY = "target_only"


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs of the DI estimator.

    ``order_tolerance`` is the number of standard errors by which a smaller
    Markov order may exceed the minimum prediction loss and still be chosen;
    0 means plain argmin (exact ties still go to the smaller order).
    ``fixed_order`` bypasses order selection entirely.
    """

    k: int = 4
    markov_candidates: tuple[int, ...] = (1, 2, 3, 4, 5)
    transform: Transform = Transform.INCREMENT
    jitter_seed: int | None = 0
    prediction_mode: PredictionMode = PredictionMode.JOINT_PAST
    order_tolerance: float = 2.0
    fixed_order: int | None = None
    clamp_negative: bool = False

    def __post_init__(self):
        cands = tuple(sorted({int(m) for m in self.markov_candidates}))
        if not cands or cands[0] < 1:
            raise ValueError("markov_candidates must be a non-empty set of integers >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.fixed_order is not None and self.fixed_order < 1:
            raise ValueError("fixed_order must be >= 1")
        if self.order_tolerance < 0:
            raise ValueError("order_tolerance must be >= 0")
        object.__setattr__(self, "markov_candidates", cands)
        object.__setattr__(self, "transform", Transform(self.transform))
        object.__setattr__(self, "prediction_mode", PredictionMode(self.prediction_mode))

    @property
    def max_order(self) -> int:
        return self.fixed_order or self.markov_candidates[-1]


@dataclass(frozen=True)
class EmbeddedPair:
    """Row ``i`` holds ``x`` (source past), ``y`` (target now), ``z`` (target past)."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    M: int
    delta: int

    @property
    def n_effective(self) -> int:
        return self.y.shape[0]

    @property
    def samples(self) -> list[tuple[np.ndarray, float, np.ndarray]]:
        return [(self.x[i], float(self.y[i, 0]), self.z[i]) for i in range(self.n_effective)]


@dataclass(frozen=True)
class DIEstimate:
    value: float
    order: int
    n_effective: int
    losses: dict = field(default_factory=dict, compare=False)


def _values(s) -> np.ndarray:
    if isinstance(s, StdSeries):
        return s.values
    return np.asarray(s, dtype=float)


def embed_pair(src, dst, M: int, delta: int = 0, k: int = 1) -> EmbeddedPair:
    """Cut aligned series into (source past, target next, target past) rows.

    For target index ``n`` (``M <= n < len - delta``) the rows are
    ``x = src[n-M+delta : n+delta]``, ``z = dst[n-M : n]``, ``y = dst[n]``.
    With ``delta = 1`` the source window ends at the same-index sample,
    modelling a market that closes earlier on the same day.
    """
    s, d = _values(src), _values(dst)
    if s.shape != d.shape or s.ndim != 1:
        raise ValueError("src and dst must be aligned 1-D sequences of equal length")
    if M < 1 or delta not in (0, 1):
        raise ValueError("need M >= 1 and delta in {0, 1}")
    L = len(d)
    if L <= M + delta + k:
        raise TooShort(f"length {L} too short for M={M}, delta={delta}, k={k}")
    n = L - M - delta
    x = sliding_window_view(s, M)[delta:delta + n]
    z = sliding_window_view(d, M)[:n]
    y = d[M:M + n, None]
    return EmbeddedPair(np.ascontiguousarray(x), y.copy(), np.ascontiguousarray(z), M, delta)


def _prediction_errors(dst, src, M: int, k: int, mode, start: int | None = None) -> np.ndarray:
    d, s = _values(dst), _values(src)
    mode = PredictionMode(mode)
    L = len(d)
    start = M if start is None else start
    if start < M:
        raise ValueError("start must be >= M")
    if L <= start + k + 1:
        raise TooShort(f"length {L} too short for M={M}, k={k}")
    n = np.arange(start, L)
    feats = sliding_window_view(d, M)[n - M]
    if mode is PredictionMode.JOINT_PAST:
        if s.shape != d.shape:
            raise ValueError("src and dst must be aligned")
        feats = np.hstack([feats, sliding_window_view(s, M)[n - M]])
    target = d[n]

    _, idx = cKDTree(feats).query(feats, k=k + 1, p=np.inf)
    rows = np.arange(len(n))[:, None]
    is_self = idx == rows
    # with duplicate features the query point may not be returned; drop the farthest instead
    is_self[~is_self.any(axis=1), -1] = True
    keep = idx[~is_self].reshape(len(n), k)
    pred = target[keep].mean(axis=1)
    return (target - pred) ** 2


def knn_predict_loss(dst, src, M: int, k: int = 4, mode: PredictionMode | str = PredictionMode.JOINT_PAST,
                     start: int | None = None) -> float:
    """Leave-one-out mean squared error of k-NN prediction of ``dst[n]``.

    Features are ``dst[n-M..n-1]`` plus, in joint-past mode, ``src[n-M..n-1]``.
    The prediction is the mean next-value of the ``k`` nearest feature vectors
    (max-norm), the query itself excluded. ``start`` sets the first target
    index so that several orders can be scored on the same targets.
    """
    return float(np.mean(_prediction_errors(dst, src, M, k, mode, start)))


def markov_order_losses(dst, src, cfg: EstimatorConfig) -> dict[int, np.ndarray]:
    """Per-target squared errors for every candidate, on a common target range."""
    start = cfg.markov_candidates[-1]
    return {M: _prediction_errors(dst, src, M, cfg.k, cfg.prediction_mode, start)
            for M in cfg.markov_candidates}


def select_order(errors: dict[int, np.ndarray], tolerance: float = 2.0) -> int:
    """Smallest order whose mean loss is within ``tolerance`` standard errors of the best."""
    means = {M: float(np.mean(e)) for M, e in errors.items()}
    best = min(means, key=lambda M: (means[M], M))
    e = errors[best]
    se = float(np.std(e, ddof=1) / np.sqrt(len(e))) if len(e) > 1 else 0.0
    limit = means[best] + tolerance * se
    return min(M for M in means if means[M] <= limit)


def estimate_markov_order(dst, src, cfg: EstimatorConfig | None = None) -> int:
    cfg = cfg or EstimatorConfig()
    if cfg.fixed_order is not None:
        return cfg.fixed_order
    return select_order(markov_order_losses(dst, src, cfg), cfg.order_tolerance)


def estimate_di_rate(src, dst, delta: int = 0, cfg: EstimatorConfig | None = None) -> DIEstimate:
    """Estimate the DI rate ``src -> dst`` in nats.

    ``src`` and ``dst`` must already be aligned and standardized.
    """
    cfg = cfg or EstimatorConfig()
    losses = {}
    if cfg.fixed_order is not None:
        M = cfg.fixed_order
    else:
        errors = markov_order_losses(dst, src, cfg)
        losses = {m: float(np.mean(e)) for m, e in errors.items()}
        M = select_order(errors, cfg.order_tolerance)
    pair = embed_pair(src, dst, M, delta, cfg.k)
    value = estimate_cmi(pair.x, pair.y, pair.z, k=cfg.k, jitter_seed=cfg.jitter_seed)
    return DIEstimate(value, M, pair.n_effective, losses)
