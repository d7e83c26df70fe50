import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from ergmclt.exceptions import DomainError
from ergmclt.graphstate import GraphState, count_hom, count_hom_rooted
from ergmclt.model import MotifGraph
from ergmclt.observables import (
    DegenerateBatchWarning,
    Degree,
    EdgeCount,
    HajekResidualGlobal,
    HajekResidualRooted,
    HomCount,
    RootedHomCount,
    RStat,
    SampleBatch,
    VertexHomCount,
    batch_means_se,
    hajek_residual_global,
    hajek_residual_rooted,
    kolmogorov_distance_to_normal,
    loglog_slope,
    parse_observable,
    residual_scan_table,
    standardize,
    wasserstein_distance_to_normal,
)


def test_parse_roundtrip():
    assert parse_observable("edges") == EdgeCount()
    assert parse_observable("deg:3") == Degree(3)
    assert parse_observable("hom:triangle") == HomCount(MotifGraph.triangle())
    assert parse_observable("rooted:wedge:1:2") == RootedHomCount(MotifGraph.wedge(), 1, 2)
    assert parse_observable("vertex:triangle:0") == VertexHomCount(MotifGraph.triangle(), 0)
    assert parse_observable("hajek:triangle", 0.3) == HajekResidualGlobal(MotifGraph.triangle(), 0.3)
    assert parse_observable("hajek_rooted:triangle:0:1", 0.3) == HajekResidualRooted(MotifGraph.triangle(), 0, 1, 0.3)
    assert parse_observable("r:triangle:4") == RStat(MotifGraph.triangle(), 4)
    for bad in ("edge", "deg", "deg:x", "hom:blob", "rooted:triangle:0"):
        with pytest.raises(DomainError):
            parse_observable(bad)


def test_observables_evaluate(rng):
    x = GraphState.erdos_renyi(10, 0.4, rng)
    assert EdgeCount()(x) == x.edge_count
    assert Degree(2)(x) == x.deg[2]
    assert HomCount(MotifGraph.triangle())(x) == count_hom(x, MotifGraph.triangle())
    with pytest.raises(DomainError):
        Degree(10)(x)


def test_edge_motif_residuals_vanish(rng):
    edge = MotifGraph.edge()
    for _ in range(20):
        x = GraphState.erdos_renyi(12, rng.random(), rng)
        assert hajek_residual_global(x, edge, 0.37) == 0.0
        for v in range(12):
            assert hajek_residual_rooted(x, edge, 0, v, 0.37) == 0.0
            assert hajek_residual_rooted(x, edge, 1, v, 0.37) == 0.0


def test_residual_formulas(rng):
    x = GraphState.erdos_renyi(11, 0.5, rng)
    tri = MotifGraph.triangle()
    p = 0.3
    assert hajek_residual_global(x, tri, p) == pytest.approx(count_hom(x, tri) - 6 * p * p * 11 * x.edge_count)
    assert hajek_residual_rooted(x, tri, 0, 4, p) == pytest.approx(count_hom_rooted(x, tri, 0, 4) - 2 * p * p * 11 * x.deg[4])
    with pytest.raises(DomainError):
        hajek_residual_global(x, tri, 1.0)


def test_kolmogorov_exact_cases():
    assert kolmogorov_distance_to_normal([0.0]) == pytest.approx(0.5)
    # quantile sample: the distance is one step 1/m at worst
    m = 1000
    z = stats.norm.ppf((np.arange(m) + 0.5) / m)
    assert kolmogorov_distance_to_normal(z) == pytest.approx(0.5 / m, rel=1e-6)
    with pytest.raises(DomainError):
        kolmogorov_distance_to_normal([])


def test_kolmogorov_matches_scipy_kstest(rng):
    z = rng.normal(size=500) * 1.1 + 0.05
    assert kolmogorov_distance_to_normal(z) == pytest.approx(stats.kstest(z, "norm").statistic, abs=1e-12)


def test_wasserstein_cases(rng):
    assert wasserstein_distance_to_normal([0.0]) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-12)
    m = 10 ** 4
    z = stats.norm.ppf((np.arange(m) + 0.5) / m)
    assert wasserstein_distance_to_normal(z) < 5e-4
    assert wasserstein_distance_to_normal(z + 0.3) == pytest.approx(0.3, abs=1e-3)
    # against a brute-force quadrature of |F_m - Phi|
    s = np.sort(rng.normal(size=40))
    grid = np.linspace(-12, 12, 2_000_001)
    F = np.searchsorted(s, grid, side="right") / s.size
    brute = np.trapezoid(np.abs(F - stats.norm.cdf(grid)), grid)
    assert wasserstein_distance_to_normal(s) == pytest.approx(brute, abs=1e-5)


def test_standardize(rng):
    v = rng.normal(5, 2, size=200)
    z = standardize(v, 4.0)
    assert z.mean() == pytest.approx(0.0, abs=1e-12)
    assert standardize(v, 4.0, center=5.0)[0] == pytest.approx((v[0] - 5) / 2)
    with pytest.raises(DomainError):
        standardize(v, 0.0)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        standardize(np.ones(10), 1.0)
        assert any(issubclass(i.category, DegenerateBatchWarning) for i in w)


def test_batch_means_se_iid(rng):
    v = rng.normal(size=20000)
    assert batch_means_se(v) == pytest.approx(1 / math.sqrt(20000), rel=0.4)


def test_sample_batch_validation():
    b = SampleBatch(["a", "b"], [[1, 2], [3, 4]])
    assert list(b.column("b")) == [2, 4] and len(b) == 2
    with pytest.raises(DomainError):
        SampleBatch(["a"], [[1, 2]])
    with pytest.raises(DomainError):
        SampleBatch(["a"], [[np.nan]])


@settings(max_examples=25, deadline=None)
@given(slope=st.floats(-4, 4), c=st.floats(-3, 3))
def test_loglog_slope_recovers_power(slope, c):
    n = np.array([16.0, 32.0, 64.0, 128.0])
    s, i = loglog_slope(n, np.exp(c) * n ** slope)
    assert s == pytest.approx(slope, abs=1e-9)


def test_residual_table_normalizer():
    tab = residual_scan_table(MotifGraph.triangle(), [10, 20], [1e4, 8e4], [100, 100])
    assert tab.rows[0].normalizer == 1e4
    assert tab.rows[1].ratio == pytest.approx(8e4 / 20 ** 4)
    assert tab.slope == pytest.approx(3.0)
    zero = residual_scan_table(MotifGraph.edge(), [10, 20], [0.0, 0.0], [5, 5])
    assert zero.slope == 0.0
