import json

import numpy as np
import pytest

from dirank.errors import NonConvergence, PairError, UnmappedNode
from dirank.estimator import EstimatorConfig
from dirank.graph import (CausalGraph, aggregate_regions, build_graph, graph_from_arrays, net_flow,
                          pagerank_rank)
from dirank.ingest import RawSeries
from dirank.synth import SynthSpec, as_raw_series, gen_iid_pair, gen_test_network


def _g(w, labels=None):
    w = np.asarray(w, dtype=float)
    return CausalGraph(labels or [str(i + 1) for i in range(len(w))], w)


def test_net_flow_single_edge():
    r = net_flow(_g([[0, 1], [0, 0]]))
    np.testing.assert_array_equal(r.scores, [1, -1])
    assert r.order == ["1", "2"]


def test_net_flow_equal_weights_ties_keep_label_order():
    w = np.full((4, 4), 0.3)
    np.fill_diagonal(w, 0)
    r = net_flow(_g(w, ["d", "b", "c", "a"]))
    np.testing.assert_array_equal(r.scores, 0)
    assert r.order == ["d", "b", "c", "a"]


def test_net_flow_three_nodes():
    r = net_flow(_g([[0, 0.5, 0.2], [0, 0, 0.4], [0, 0, 0]]))
    np.testing.assert_allclose(r.scores, [0.7, -0.1, -0.6], atol=1e-15)
    assert r.order == ["1", "2", "3"]
    assert r.rank_of("3") == 3


def test_graph_validation():
    with pytest.raises(ValueError):
        _g([[1, 0], [0, 0]])
    with pytest.raises(ValueError):
        _g([[0, np.inf], [0, 0]])
    with pytest.raises(ValueError):
        CausalGraph(["a"], np.zeros((2, 2)))


def test_aggregate_regions_examples():
    w = np.zeros((4, 4))
    for i in (0, 1):
        for j in (2, 3):
            w[i, j] = w[j, i] = 0.1
    w[0, 1] = w[2, 3] = 5.0  # intra-region, must vanish
    rg = aggregate_regions(_g(w), {"1": "EU", "2": "EU", "3": "US", "4": "US"})
    assert rg.labels == ["EU", "US"]
    np.testing.assert_allclose(rg.weights, [[0, 0.4], [0.4, 0]])

    one = aggregate_regions(_g(w), {str(i): "X" for i in range(1, 5)})
    np.testing.assert_array_equal(one.weights, [[0.0]])

    with pytest.raises(UnmappedNode):
        aggregate_regions(_g(w), {"1": "EU"})


def test_pagerank_symmetric_uniform():
    w = np.ones((5, 5)) - np.eye(5)
    for rev in (True, False):
        np.testing.assert_allclose(pagerank_rank(_g(w), reverse=rev).scores, 0.2, atol=1e-12)


def test_pagerank_forward_walk_sink_attracts_mass():
    r = pagerank_rank(_g([[0, 1], [0, 0]]), reverse=False)
    assert r.scores[1] > r.scores[0]
    assert r.order == ["2", "1"]
    # influence view ranks the source first
    assert pagerank_rank(_g([[0, 1], [0, 0]])).order == ["1", "2"]


def test_pagerank_clamps_negative_and_sums_to_one():
    w = np.array([[0, -0.2, 0.5], [0.1, 0, 0.3], [0, 0.2, 0]])
    r = pagerank_rank(_g(w))
    assert r.scores.sum() == pytest.approx(1.0)
    assert np.all(r.scores > 0)
    with pytest.raises(ValueError):
        pagerank_rank(_g(w), damping=1.0)
    with pytest.raises(NonConvergence):
        pagerank_rank(_g(w), max_iter=1)


def test_pagerank_matches_dense_eigenvector():
    rng = np.random.default_rng(0)
    w = rng.random((6, 6))
    np.fill_diagonal(w, 0)
    w[2] = 0  # dangling row
    d = 0.85
    P = w / np.where(w.sum(1, keepdims=True) == 0, 1, w.sum(1, keepdims=True))
    P[2] = 1 / 6
    G = d * P + (1 - d) / 6
    vals, vecs = np.linalg.eig(G.T)
    v = np.real(vecs[:, np.argmax(np.real(vals))])
    v /= v.sum()
    np.testing.assert_allclose(pagerank_rank(_g(w), d, reverse=False).scores, v, atol=1e-9)


def test_serialization_round_trip():
    rng = np.random.default_rng(1)
    w = rng.standard_normal((5, 5)) / 7
    np.fill_diagonal(w, 0)
    g = CausalGraph(list("abcde"), w, rng.integers(1, 6, (5, 5)), rng.integers(100, 200, (5, 5)), {"a": "Asia"})
    back = CausalGraph.from_json(g.to_json())
    np.testing.assert_array_equal(back.weights, g.weights)
    np.testing.assert_array_equal(back.orders, g.orders)
    assert back.regions == {"a": "Asia"}
    np.testing.assert_array_equal(CausalGraph.from_csv(g.to_csv()).weights, g.weights)
    assert g.to_csv().splitlines()[0] == "source,a,b,c,d,e"
    assert json.loads(g.to_json())["labels"] == list("abcde")


def test_build_graph_independent_noise():
    x = np.stack(gen_iid_pair(SynthSpec(2000, 8, "iid_pair")))
    g = build_graph(as_raw_series(x, ["a", "b"]))
    assert np.all(np.abs(g.weights) < 0.05)
    assert g.orders[0, 1] >= 1 and g.n_effective[0, 1] > 1900


def test_build_graph_self_copy_lag():
    rng = np.random.default_rng(2)
    s = rng.standard_normal(1501)
    g = graph_from_arrays([s[1:], s[:-1]], ["src", "lagged"])
    assert g.weights[0, 1] > 1.0
    assert abs(g.weights[1, 0]) < 0.05


def test_build_graph_region_offset_used():
    rng = np.random.default_rng(3)
    s = rng.standard_normal(2000)
    d = s + rng.standard_normal(2000)
    g = graph_from_arrays([s, d], ["hsi", "dji"], regions={"hsi": "Asia", "dji": "NorthAmerica"})
    assert g.weights[0, 1] > 0.2
    g0 = graph_from_arrays([s, d], ["hsi", "dji"])
    assert g0.weights[0, 1] < 0.05


def test_clamp_negative_flag():
    x = np.stack(gen_iid_pair(SynthSpec(1000, 3, "iid_pair")))
    raw = graph_from_arrays(x)
    clamped = graph_from_arrays(x, cfg=EstimatorConfig(clamp_negative=True))
    np.testing.assert_array_equal(clamped.weights, np.clip(raw.weights, 0, None))


def test_pair_errors_name_the_pair():
    from datetime import date
    a = RawSeries("a", "Other", [date(2020, 1, d) for d in range(1, 8)], np.arange(1.0, 8.0))
    b = RawSeries("b", "Other", [date(2020, 1, d) for d in range(1, 8)], np.arange(2.0, 9.0))
    with pytest.raises(PairError) as info:
        build_graph([a, b])
    assert info.value.src == "a" and info.value.dst == "b"


def test_parallel_matches_serial():
    x = gen_test_network(SynthSpec(600, 2))
    series = as_raw_series(x)
    cfg = EstimatorConfig(markov_candidates=(1, 2, 3))
    a = build_graph(series, cfg)
    b = build_graph(series, cfg, n_jobs=2)
    assert a.to_json() == b.to_json()


@pytest.mark.slow
def test_pagerank_top_node_matches_net_flow():
    agree = 0
    for seed in range(6):
        g = graph_from_arrays(gen_test_network(SynthSpec(2000, seed)))
        agree += pagerank_rank(g).order[0] == net_flow(g).order[0]
    assert agree >= 5
