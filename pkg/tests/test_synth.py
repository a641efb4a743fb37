import math

import numpy as np
import pytest

from dirank.errors import DomainError
from dirank.preprocess import increments
from dirank.synth import (BURN_IN, SynthSpec, analytic_gaussian_di, as_raw_series, gen_gaussian_lag,
                          gen_test_network, to_prices)


def test_noiseless_recurrences():
    spec = SynthSpec(300, 1)
    w = np.random.default_rng(9).standard_normal((4, 300 + BURN_IN))
    w[1:] = 0.0
    x = gen_test_network(spec, noise=w)
    np.testing.assert_array_equal(x[2, 1:], x[1, :-1])
    np.testing.assert_array_equal(x[3, 2:], x[0, :-2])
    np.testing.assert_array_equal(x[1, 2:], x[0, 1:-1] ** 2 + x[0, :-2] ** 2)


def test_network_shapes_and_stats():
    x = gen_test_network(SynthSpec(2000, 0))
    assert x.shape == (4, 2000)
    assert x[0].var() == pytest.approx(1.0, abs=0.1)
    assert x[1].mean() == pytest.approx(2.0, abs=0.2)  # E[X1^2 + X1^2]


def test_reproducible_and_seed_sensitive():
    a, b = gen_test_network(SynthSpec(500, 4)), gen_test_network(SynthSpec(500, 4))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, gen_test_network(SynthSpec(500, 5)))


def test_gaussian_lag():
    s, d = gen_gaussian_lag(SynthSpec(5000, 2, "gaussian_lag", a=0.0))
    assert abs(np.corrcoef(s[:-1], d[1:])[0, 1]) < 0.05
    s, d = gen_gaussian_lag(SynthSpec(5000, 2, "gaussian_lag", a=2.0, sigma_w=0.5))
    resid = d[1:] - 2.0 * s[:-1]
    assert resid.std() == pytest.approx(0.5, rel=0.05)


def test_analytic_values():
    assert analytic_gaussian_di(0.0, 1.0) == 0.0
    assert analytic_gaussian_di(1.0, 1.0) == pytest.approx(0.5 * math.log(2))
    assert analytic_gaussian_di(2.0, 1.0) == pytest.approx(0.5 * math.log(5))
    assert analytic_gaussian_di(1.0, 1.0) == pytest.approx(0.3466, abs=1e-4)
    assert analytic_gaussian_di(2.0, 1.0) == pytest.approx(0.8047, abs=1e-4)
    with pytest.raises(DomainError):
        analytic_gaussian_di(1.0, 0.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(50)
    with pytest.raises(ValueError):
        SynthSpec(200, network="garch")


def test_prices_round_trip():
    x = gen_test_network(SynthSpec(400, 1))
    p = to_prices(x[1])
    assert p.min() > 0
    np.testing.assert_allclose(increments(p), x[1], atol=1e-9)
    series = as_raw_series(x)
    assert [s.id for s in series] == ["1", "2", "3", "4"]
    assert len(series[0]) == 401
