import math

import mpmath
import numpy as np
import pytest

from conftest import small_motifs
from ergmclt.dynamics import Well
from ergmclt.exceptions import BudgetError, DomainError
from ergmclt.graphstate import GraphState, count_hom, n_pairs
from ergmclt.model import ErgmSpec, MotifGraph
from ergmclt.observables import Degree, EdgeCount, HomCount
from ergmclt.oracle import (
    build_exact,
    erdos_renyi_q,
    exact_law,
    exact_marginal,
    exact_moments,
    exact_transition_check,
    hom_counts_all,
    load_dump,
    product_law_tv,
    total_variation,
)


def test_edge_only_is_product_law():
    dist = build_exact(ErgmSpec.erdos_renyi(0.4), 5)
    assert product_law_tv(dist, erdos_renyi_q(0.4)) < 1e-12


def test_zero_parameters_give_uniform_law():
    spec = ErgmSpec.build(["edge", "triangle"], [0.0, 0.0])
    for n in (3, 4, 5):
        dist = build_exact(spec, n)
        pr = dist.probabilities()
        np.testing.assert_allclose(pr, 1.0 / dist.size, rtol=1e-12)
        N = n_pairs(n)
        m, v = exact_moments(dist, EdgeCount())
        assert m == pytest.approx(N / 2) and v == pytest.approx(N / 4)
        m, v = exact_moments(dist, Degree(0))
        assert m == pytest.approx((n - 1) / 2) and v == pytest.approx((n - 1) / 4)


def test_three_vertices_by_hand():
    # on K3 the only triangle-containing graph is the full one, with 6 homomorphisms
    b0, b1 = mpmath.mpf("0.2"), mpmath.mpf("0.1")
    spec = ErgmSpec.build(["edge", "triangle"], [0.2, 0.1])
    dist = build_exact(spec, 3)
    terms = []
    for k in range(4):
        w = b0 * 2 * k + (b1 * 6 / 3 if k == 3 else 0)
        terms += [mpmath.exp(w)] * math.comb(3, k)
    z = mpmath.log(mpmath.fsum(terms))
    assert dist.log_partition == pytest.approx(float(z), abs=1e-13)
    full = dist.log_prob(GraphState.complete(3))
    assert full == pytest.approx(float(b0 * 6 + b1 * 2 - z), abs=1e-13)


def test_marginals_symmetric_and_sum_to_mean(edge_triangle):
    dist = build_exact(edge_triangle, 5)
    marg = [exact_marginal(dist, e) for e in range(dist.n_edges)]
    np.testing.assert_allclose(marg, marg[0], atol=1e-12)
    assert sum(marg) == pytest.approx(exact_moments(dist, EdgeCount())[0], rel=1e-12)
    with pytest.raises(DomainError):
        exact_marginal(dist, dist.n_edges)


def test_partition_invariant_under_relabelling(edge_triangle):
    dist = build_exact(edge_triangle, 4)
    rng = np.random.default_rng(3)
    perm = rng.permutation(4)
    for i in rng.integers(0, dist.size, 20):
        x = dist.graph(int(i))
        y = x.permuted(perm)
        assert dist.logw[dist.index_of(y)] == pytest.approx(dist.logw[int(i)], abs=1e-12)
        assert dist.index_of(x) == int(i)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_hom_counts_all_match_direct(n):
    for G in small_motifs(4):
        vals = hom_counts_all(G, n)
        step = max(1, len(vals) // 64)
        for i in range(0, len(vals), step):
            x = GraphState.from_bits(n, (i >> np.arange(n_pairs(n))) & 1)
            assert vals[i] == count_hom(x, G)


def test_observable_fast_paths_match_generic(edge_triangle):
    dist = build_exact(edge_triangle, 4)
    tri = HomCount(MotifGraph.triangle())
    keys, pr = exact_law(dist, tri)
    assert pr.sum() == pytest.approx(1.0)
    want = sum(dist.probabilities()[i] * count_hom(dist.graph(i), MotifGraph.triangle()) for i in range(dist.size))
    assert exact_moments(dist, tri)[0] == pytest.approx(want, rel=1e-12)


def test_transition_check_detailed_balance(edge_triangle):
    chk = exact_transition_check(build_exact(edge_triangle, 4))
    assert chk.max_violation < 1e-12 and chk.pairs == 64 * 6 // 2 * 1 and chk.boundary_rejections == 0
    zero = exact_transition_check(build_exact(ErgmSpec.build(["edge", "triangle"], [0.0, 0.0]), 4))
    assert zero.max_violation == 0.0


def test_transition_check_with_band(edge_triangle):
    well = Well(0.5, 0.2)
    dist = build_exact(edge_triangle, 5, well=well)
    lo, hi = well.bounds(5)
    assert dist.band == (lo, hi)
    pr = dist.probabilities()
    assert pr.sum() == pytest.approx(1.0) and np.all(pr[(dist.edges < lo) | (dist.edges > hi)] == 0)
    chk = exact_transition_check(dist)
    assert chk.max_violation < 1e-12 and chk.boundary_rejections > 0


def test_budgets(edge_triangle):
    with pytest.raises(BudgetError):
        build_exact(edge_triangle, 8)
    with pytest.raises(BudgetError):
        exact_transition_check(build_exact(edge_triangle, 6))
    with pytest.raises(DomainError):
        build_exact(edge_triangle, 4, well=(20, 30))


def test_empirical_tv_and_dump(edge_triangle, tmp_path):
    dist = build_exact(edge_triangle, 3)
    counts = np.round(dist.probabilities() * 1e6)
    assert total_variation(dist, counts) < 1e-5
    with pytest.raises(DomainError):
        total_variation(dist, np.ones(3))
    dist.dump(tmp_path / "d.bin")
    rec = load_dump(tmp_path / "d.bin")
    assert np.array_equal(rec["index"], np.arange(8)) and np.array_equal(rec["logw"], dist.logw)
    s = dist.summary()
    assert s["normalization_error"] < 1e-12 and len(s["marginals"]) == 3
