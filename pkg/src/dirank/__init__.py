"""Rank time series by net-flow in a pairwise directed-information graph."""

from .errors import DirankError
from .estimator import EstimatorConfig, estimate_di_rate, estimate_markov_order
from .graph import CausalGraph, RankingResult, aggregate_regions, build_graph, graph_from_arrays, net_flow, pagerank_rank
from .ingest import RawSeries, Region, SeriesFormat, load_series
from .knn import digamma, estimate_cmi

__all__ = [
    "CausalGraph",
    "DirankError",
    "EstimatorConfig",
    "RankingResult",
    "RawSeries",
    "Region",
    "SeriesFormat",
    "aggregate_regions",
    "build_graph",
    "digamma",
    "estimate_cmi",
    "estimate_di_rate",
    "estimate_markov_order",
    "graph_from_arrays",
    "load_series",
    "net_flow",
    "pagerank_rank",
]

__version__ = "0.1.0"
