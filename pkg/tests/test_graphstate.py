import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergmclt.exceptions import DomainError
from ergmclt.graphstate import (
    GraphState,
    count_hom,
    count_hom_at_vertex,
    count_hom_at_vertex_naive,
    count_hom_delta,
    count_hom_delta_all,
    count_hom_delta_naive,
    count_hom_delta_selected,
    count_hom_naive,
    count_hom_rooted,
    count_hom_rooted_naive,
    edge_index,
    edge_pair,
    edge_pairs,
    flip,
    n_pairs,
    r_statistic,
)
from ergmclt.model import MotifGraph

TRI = MotifGraph.triangle()
WEDGE = MotifGraph.wedge()


def test_edge_index_roundtrip():
    n = 11
    eu, ew = edge_pairs(n)
    assert len(eu) == n_pairs(n)
    for k in range(n_pairs(n)):
        u, w = edge_pair(n, k)
        assert edge_index(n, u, w) == k == edge_index(n, w, u)
    with pytest.raises(DomainError):
        edge_index(n, 3, 3)
    with pytest.raises(DomainError):
        edge_pair(n, n_pairs(n))


def test_wide_graph_crosses_word_boundary(rng):
    # rows span several 64-bit words
    x = GraphState.erdos_renyi(150, 0.05, rng)
    x.check()
    assert count_hom(x, MotifGraph.edge()) == 2 * x.edge_count
    d = x.to_dense().astype(np.int64)
    assert count_hom(x, TRI) == int(np.trace(d @ d @ d))
    assert count_hom(x, WEDGE) == int((d.sum(axis=1) ** 2).sum())


def test_constructors_and_text(rng):
    x = GraphState.erdos_renyi(9, 0.5, rng)
    assert GraphState.from_text(x.to_text()) == x
    assert GraphState.from_bits(9, x.to_bits()) == x
    assert GraphState.from_dense(x.to_dense()) == x
    assert GraphState.complete(6).edge_count == 15 and GraphState.empty(6).edge_count == 0
    with pytest.raises(DomainError):
        GraphState.from_text("3\n0 1\n")
    with pytest.raises(DomainError):
        GraphState.from_dense(np.ones((3, 3)))


def test_flip_updates_bookkeeping(rng):
    x = GraphState.erdos_renyi(12, 0.3, rng)
    y = x.copy()
    for k in rng.integers(0, n_pairs(12), 200):
        flip(y, int(k))
        y.check()
    z = y.copy()
    flip(z, 0)
    flip(z, 0)
    assert z == y


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(4, 9), p=st.floats(0.1, 0.9))
def test_permutation_invariance(seed, n, p):
    rng = np.random.default_rng(seed)
    x = GraphState.erdos_renyi(n, p, rng)
    perm = rng.permutation(n)
    y = x.permuted(perm)
    for G in (TRI, WEDGE, MotifGraph.cycle(4), MotifGraph.star(3)):
        assert count_hom(x, G) == count_hom(y, G)
    v = int(rng.integers(n))
    assert count_hom_rooted(x, TRI, 0, v) == count_hom_rooted(y, TRI, 0, int(perm[v]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(3, 8))
def test_delta_is_difference_of_counts(seed, n):
    rng = np.random.default_rng(seed)
    x = GraphState.erdos_renyi(n, 0.5, rng)
    k = int(rng.integers(n_pairs(n)))
    for G in (TRI, WEDGE, MotifGraph.path(3), MotifGraph.clique(4)):
        plus, minus = x.copy(), x.copy()
        if not plus[k]:
            flip(plus, k)
        if minus[k]:
            flip(minus, k)
        assert count_hom_delta(x, G, k) == count_hom(plus, G) - count_hom(minus, G)


def test_delta_all_and_selected(rng):
    x = GraphState.erdos_renyi(10, 0.4, rng)
    allv = count_hom_delta_all(x, TRI)
    sel = [3, 7, 20]
    np.testing.assert_array_equal(count_hom_delta_selected(x, TRI, sel), allv[sel])
    assert all(allv[k] == count_hom_delta(x, TRI, k) for k in range(n_pairs(10)))
    with pytest.raises(DomainError):
        count_hom_delta_selected(x, TRI, [n_pairs(10)])
    # the state is untouched by delta evaluation
    x.check()


def test_rooted_sum_and_vertex_counts(rng):
    x = GraphState.erdos_renyi(8, 0.5, rng)
    for G in (TRI, WEDGE, MotifGraph.star(3)):
        for rho in range(G.v):
            assert sum(count_hom_rooted(x, G, rho, v) for v in range(8)) == count_hom(x, G)
        for v in range(8):
            assert count_hom_at_vertex(x, G, v) == count_hom_at_vertex_naive(x, G, v)
    with pytest.raises(IndexError):
        count_hom_rooted(x, TRI, 3, 0)


def test_naive_oracles_agree_on_one_graph(rng):
    x = GraphState.erdos_renyi(7, 0.5, rng)
    G = MotifGraph.cycle(4)
    assert count_hom(x, G) == count_hom_naive(x, G)
    assert count_hom_rooted(x, G, 1, 2) == count_hom_rooted_naive(x, G, 1, 2)
    u, w = edge_pair(7, 5)
    assert count_hom_delta(x, G, 5) == count_hom_delta_naive(x, G, u, w)


def test_r_statistic_complete_graph():
    # in K_n, N_tri(x, e) = 6 (n - 2), so r = (6(n-2) / (6n))^(1/2)
    x = GraphState.complete(20)
    r = r_statistic(x, TRI, 0)
    assert not r.degenerate
    assert r.value == pytest.approx((18 / 20) ** 0.5)
    assert r_statistic(x, MotifGraph.edge(), 0).degenerate
