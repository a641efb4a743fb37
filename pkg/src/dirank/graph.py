"""Pairwise DI graph assembly, net-flow and PageRank rankings, region aggregation."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import NonConvergence, PairError, UnmappedNode
from .estimator import DIEstimate, EstimatorConfig, estimate_di_rate
from .ingest import PairAlignment, RawSeries, Region, align_pair, region_offset
from .preprocess import prepare, standardize

_FLOAT = ".17g"


@dataclass
class CausalGraph:
    """Weighted digraph; ``weights[i, j]`` is the DI rate from node i to node j."""

    labels: list[str]
    weights: np.ndarray
    orders: np.ndarray | None = None
    n_effective: np.ndarray | None = None
    regions: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.labels = [str(lab) for lab in self.labels]
        self.weights = np.array(self.weights, dtype=float)
        L = len(self.labels)
        if self.weights.shape != (L, L):
            raise ValueError(f"weights must be {L}x{L}, got {self.weights.shape}")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        if np.any(np.diag(self.weights) != 0):
            raise ValueError("weights must have a zero diagonal")
        if len(set(self.labels)) != L:
            raise ValueError("labels must be unique")
        for name in ("orders", "n_effective"):
            arr = getattr(self, name)
            setattr(self, name, np.zeros((L, L), dtype=int) if arr is None else np.asarray(arr, dtype=int))

    @property
    def size(self) -> int:
        return len(self.labels)

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "weights": self.weights.tolist(),
            "orders": self.orders.tolist(),
            "n_effective": self.n_effective.tolist(),
            "regions": dict(self.regions),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CausalGraph":
        return cls(d["labels"], d["weights"], d.get("orders"), d.get("n_effective"), dict(d.get("regions", {})))

    def to_json(self) -> str:
        # json writes floats with repr(), the shortest string that round-trips exactly
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CausalGraph":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        """Heatmap-ready matrix: header row of targets, one row per source."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["source"] + self.labels)
        for lab, row in zip(self.labels, self.weights):
            w.writerow([lab] + [format(v, _FLOAT) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CausalGraph":
        rows = list(csv.reader(io.StringIO(text)))
        labels = rows[0][1:]
        if [r[0] for r in rows[1:]] != labels:
            raise ValueError("row labels must match column labels")
        return cls(labels, [[float(v) for v in r[1:]] for r in rows[1:]])

    def save(self, stem: Path | str) -> tuple[Path, Path]:
        stem = Path(stem)
        js, cs = stem.with_suffix(".json"), stem.with_suffix(".csv")
        js.write_text(self.to_json())
        cs.write_text(self.to_csv())
        return js, cs


@dataclass(frozen=True)
class RankingResult:
    labels: list[str]
    scores: np.ndarray
    order: list[str]

    def rank_of(self, label: str) -> int:
        return self.order.index(label) + 1

    def rows(self) -> list[tuple[str, float, int]]:
        return [(lab, float(self.scores[self.labels.index(lab)]), i + 1) for i, lab in enumerate(self.order)]


def _ordered(labels: Sequence[str], scores: np.ndarray) -> list[str]:
    # stable sort keeps label order among equal scores
    idx = np.argsort(-scores, kind="stable")
    return [labels[i] for i in idx]


def net_flow(g: CausalGraph) -> RankingResult:
    """Outgoing minus incoming weight per node, ranked high to low."""
    w = g.weights
    scores = w.sum(axis=1) - w.sum(axis=0)
    return RankingResult(list(g.labels), scores, _ordered(g.labels, scores))


def pagerank_rank(g: CausalGraph, damping: float = 0.85, reverse: bool = True,
                  tol: float = 1e-10, max_iter: int = 100_000) -> RankingResult:
    """PageRank scores on the (clamped non-negative) edge weights.

    With ``reverse=False`` the random walker follows edges, so mass pools at
    sinks. The default walks edges backwards, so mass pools at nodes that
    influence many others, which makes the ordering comparable to net-flow.
    Dangling nodes teleport uniformly.
    """
    if not 0 < damping < 1:
        raise ValueError("damping must lie in (0, 1)")
    w = np.clip(g.weights, 0.0, None)
    if reverse:
        w = w.T
    L = g.size
    out = w.sum(axis=1)
    dangling = out == 0
    P = np.divide(w, out[:, None], out=np.zeros_like(w), where=~dangling[:, None])
    r = np.full(L, 1.0 / L)
    for _ in range(max_iter):
        nxt = damping * (r @ P + r[dangling].sum() / L) + (1 - damping) / L
        nxt /= nxt.sum()
        if np.abs(nxt - r).sum() < tol:
            r = nxt
            break
        r = nxt
    else:
        raise NonConvergence(f"PageRank did not converge in {max_iter} iterations")
    return RankingResult(list(g.labels), r, _ordered(g.labels, r))


def aggregate_regions(g: CausalGraph, region_of: Mapping[str, str] | None = None) -> CausalGraph:
    """Collapse nodes into region super-nodes; inter-region weights are summed.

    Region labels appear in order of first occurrence among ``g.labels``.
    """
    region_of = dict(region_of if region_of is not None else g.regions)
    missing = [lab for lab in g.labels if lab not in region_of]
    if missing:
        raise UnmappedNode(f"no region for nodes {missing}")
    regions = list(dict.fromkeys(str(region_of[lab]) for lab in g.labels))
    member = np.array([regions.index(str(region_of[lab])) for lab in g.labels])
    R = len(regions)
    agg = np.zeros((R, R))
    for a in range(R):
        for b in range(R):
            if a != b:
                agg[a, b] = g.weights[np.ix_(member == a, member == b)].sum()
    return CausalGraph(regions, agg, regions={r: r for r in regions})


def estimate_alignment(pa: PairAlignment, cfg: EstimatorConfig) -> DIEstimate:
    """Transform, standardize and estimate one aligned ordered pair."""
    s = prepare(pa.src_values, cfg.transform)
    d = prepare(pa.dst_values, cfg.transform)
    return estimate_di_rate(s, d, pa.delta, cfg)


def _pair_task(args):
    src, dst, cfg = args
    try:
        return estimate_alignment(align_pair(src, dst), cfg)
    except Exception as exc:  # re-raised with pair identity by the caller
        return exc


def _array_task(args):
    src, dst, delta, cfg = args
    try:
        return estimate_di_rate(src, dst, delta, cfg)
    except Exception as exc:
        return exc


def _run(tasks, fn, n_jobs: int):
    if n_jobs == 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=None if n_jobs < 1 else n_jobs) as pool:
        return list(pool.map(fn, tasks))


def assemble_graph(labels, pairs, results, cfg: EstimatorConfig, regions=None) -> CausalGraph:
    L = len(labels)
    w = np.zeros((L, L))
    orders = np.zeros((L, L), dtype=int)
    neff = np.zeros((L, L), dtype=int)
    for (i, j), res in zip(pairs, results):
        if isinstance(res, Exception):
            raise PairError(labels[i], labels[j], res) from res
        w[i, j] = max(res.value, 0.0) if cfg.clamp_negative else res.value
        orders[i, j] = res.order
        neff[i, j] = res.n_effective
    return CausalGraph(labels, w, orders, neff, dict(regions or {}))


def ordered_pairs(L: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(L) for j in range(L) if i != j]


def build_graph(series: Sequence[RawSeries], cfg: EstimatorConfig | None = None, n_jobs: int = 1) -> CausalGraph:
    """Estimate every ordered pair of price series.

    Each pair is intersected on its own shared calendar, transformed,
    standardized and shifted by the trading-order offset of its regions.
    """
    cfg = cfg or EstimatorConfig()
    if len(series) < 2:
        raise ValueError("need at least two series")
    pairs = ordered_pairs(len(series))
    results = _run([(series[i], series[j], cfg) for i, j in pairs], _pair_task, n_jobs)
    labels = [s.id for s in series]
    return assemble_graph(labels, pairs, results, cfg, {s.id: s.region.value for s in series})


def graph_from_arrays(data, labels: Sequence[str] | None = None, cfg: EstimatorConfig | None = None,
                      regions: Mapping[str, Region | str] | None = None, n_jobs: int = 1) -> CausalGraph:
    """Like :func:`build_graph` for equal-length, already stationary sequences.

    The transform step is skipped; each sequence is only standardized.
    """
    cfg = cfg or EstimatorConfig()
    data = [np.asarray(row, dtype=float) for row in data]
    labels = [str(lab) for lab in (labels or range(1, len(data) + 1))]
    regions = {lab: Region.parse(r).value for lab, r in (regions or {}).items()}
    std = [standardize(row) for row in data]
    pairs = ordered_pairs(len(data))
    tasks = [(std[i], std[j], region_offset(regions.get(labels[i], "Other"), regions.get(labels[j], "Other")), cfg)
             for i, j in pairs]
    results = _run(tasks, _array_task, n_jobs)
    return assemble_graph(labels, pairs, results, cfg, regions)
