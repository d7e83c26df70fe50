import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergmclt.exceptions import DomainError
from ergmclt.graphstate import GraphState, count_hom
from ergmclt.model import (
    ErgmSpec,
    MotifGraph,
    entropy_I,
    hamiltonian_full,
    hamiltonian_scalar,
    hamiltonian_scalar_deriv,
    l_beta,
    l_beta_deriv,
    logistic,
    phi_beta,
    phi_beta_deriv,
)


def test_catalog_shapes():
    assert (MotifGraph.edge().v, MotifGraph.edge().e) == (2, 1)
    assert (MotifGraph.triangle().v, MotifGraph.triangle().e) == (3, 3)
    assert MotifGraph.star(3).degrees == (3, 1, 1, 1)
    assert MotifGraph.wedge().is_forest and not MotifGraph.triangle().is_forest
    assert MotifGraph.cycle(4).e == 4 and MotifGraph.clique(4).e == 6
    assert MotifGraph.from_name("3-star") == MotifGraph.star(3)
    assert MotifGraph.from_name("K4") == MotifGraph.clique(4)
    assert MotifGraph.wedge().degree_square_sum() == 2
    assert MotifGraph.triangle().degree_square_sum() == 6


@pytest.mark.parametrize("bad", [(1, ((0, 0),)), (2, ((0, 0),)), (2, ((0, 2),)), (3, ((0, 1), (1, 0))), (3, ())])
def test_motif_validation(bad):
    with pytest.raises(DomainError):
        MotifGraph(*bad)


def test_spec_validation():
    with pytest.raises(DomainError):
        ErgmSpec.build(["triangle"], [0.1])
    with pytest.raises(DomainError):
        ErgmSpec.build(["edge", "triangle"], [0.1, -0.2])
    with pytest.raises(DomainError):
        ErgmSpec.build(["edge", "triangle"], [0.1])
    with pytest.raises(DomainError):
        MotifGraph.from_name("pentagon")


def test_entropy_boundary_and_symmetry():
    assert entropy_I(0.0) == 0.0 and entropy_I(1.0) == 0.0
    assert entropy_I(0.5) == pytest.approx(-0.5 * math.log(2))
    q = np.linspace(0.01, 0.99, 50)
    np.testing.assert_allclose(entropy_I(q), entropy_I(1 - q), atol=1e-15)
    with pytest.raises(DomainError):
        entropy_I(1.2)


def test_scalar_hamiltonian_closed_form(edge_triangle):
    q = 0.37
    assert hamiltonian_scalar(edge_triangle, q) == pytest.approx(0.2 * q + 0.1 * q ** 3)
    assert hamiltonian_scalar_deriv(edge_triangle, q) == pytest.approx(0.2 + 0.3 * q ** 2)
    assert hamiltonian_scalar_deriv(edge_triangle, q, 2) == pytest.approx(0.6 * q)


@settings(max_examples=60, deadline=None)
@given(q=st.floats(0.01, 0.99), b0=st.floats(-2, 1), b1=st.floats(0, 1), b2=st.floats(0, 1))
def test_derivatives_match_finite_differences(q, b0, b1, b2):
    spec = ErgmSpec.build(["edge", "wedge", "triangle"], [b0, b1, b2])
    h = 1e-6
    fd = (l_beta(spec, q + h) - l_beta(spec, q - h)) / (2 * h)
    assert l_beta_deriv(spec, q, 1) == pytest.approx(fd, abs=1e-6)
    fd2 = (l_beta_deriv(spec, q + h, 1) - l_beta_deriv(spec, q - h, 1)) / (2 * h)
    assert l_beta_deriv(spec, q, 2) == pytest.approx(fd2, abs=1e-5)
    fdp = (phi_beta(spec, q + h) - phi_beta(spec, q - h)) / (2 * h)
    assert phi_beta_deriv(spec, q) == pytest.approx(fdp, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(q=st.floats(0.01, 0.99), b0=st.floats(-2, 1), b1=st.floats(0, 1))
def test_stationary_iff_fixed_point(q, b0, b1):
    # L'(q) = 0 exactly when phi(q) = q, and the signs agree
    spec = ErgmSpec.build(["edge", "triangle"], [b0, b1])
    d = l_beta_deriv(spec, q, 1)
    gap = phi_beta(spec, q) - q
    assert np.sign(d) == np.sign(gap) or abs(d) < 1e-12


def test_erdos_renyi_fixed_point():
    spec = ErgmSpec.erdos_renyi(0.4)
    q = logistic(0.8)
    assert phi_beta(spec, 0.123) == pytest.approx(q)
    assert l_beta_deriv(spec, q, 1) == pytest.approx(0.0, abs=1e-14)


def test_logistic_stable_at_extremes():
    assert logistic(800.0) == 1.0 and logistic(-800.0) == 0.0
    assert logistic(0.0) == 0.5


def test_full_hamiltonian_density_form(rng):
    spec = ErgmSpec.build(["edge", "wedge", "triangle"], [-0.3, 0.2, 0.1])
    x = GraphState.erdos_renyi(9, 0.4, rng)
    n = 9
    want = -0.3 * count_hom(x, MotifGraph.edge()) / n ** 2 + 0.2 * count_hom(x, MotifGraph.wedge()) / n ** 3 \
        + 0.1 * count_hom(x, MotifGraph.triangle()) / n ** 3
    assert hamiltonian_full(spec, x) == pytest.approx(want, rel=1e-14)
    # complete graph: maps only need adjacent images distinct
    m = 40
    k = GraphState.complete(m)
    want = -0.3 * (m - 1) / m + 0.2 * (m - 1) ** 2 / m ** 2 + 0.1 * (m - 1) * (m - 2) / m ** 2
    assert hamiltonian_full(spec, k) == pytest.approx(want, rel=1e-13)
