import math

import mpmath
import numpy as np
import pytest

from ergmclt.exceptions import DomainError, NotAttractingError
from ergmclt.model import ErgmSpec, l_beta_deriv, logistic, phi_beta
from ergmclt.phase import (
    CRITICAL,
    DOBRUSHIN,
    SUBCRITICAL,
    SUPERCRITICAL,
    attracting,
    find_stationary_points,
    phase_grid,
    phase_report,
    regime_map,
    variance_proxies,
    variance_proxy_degree,
    variance_proxy_edge,
)

TWO_WELL_P = 0.17865171427605914
TWO_WELL_UPPER = 0.9272434702564788


def test_two_well_spec_is_supercritical(two_well):
    rep = find_stationary_points(two_well)
    assert rep.regime == SUPERCRITICAL
    assert len(rep.local_maxima) >= 2
    assert rep.M_beta == [pytest.approx(TWO_WELL_P, abs=1e-12)]
    assert rep.local_maxima[1] == pytest.approx(TWO_WELL_UPPER, abs=1e-12)
    assert max(rep.fixed_point_residuals) < 1e-12
    assert not rep.coexistence


def test_two_well_root_against_high_precision(two_well):
    mpmath.mp.dps = 40
    b0, b1, b2 = two_well.beta

    def dL(q):
        h1 = b0 + 2 * b1 * q + 3 * b2 * q ** 2
        return h1 - mpmath.log(q / (1 - q)) / 2

    root = mpmath.findroot(dL, 0.18)
    assert float(root) == pytest.approx(TWO_WELL_P, abs=1e-14)


def test_erdos_renyi_regime():
    rep = find_stationary_points(ErgmSpec.erdos_renyi(0.4))
    assert rep.regime == DOBRUSHIN
    assert rep.p_star == pytest.approx(logistic(0.8), abs=1e-13)


def test_k0_scan_traces_logistic():
    for b0 in np.linspace(-2, 1, 13):
        rep = find_stationary_points(ErgmSpec.erdos_renyi(float(b0)), grid=2000)
        assert rep.p_star == pytest.approx(logistic(2 * b0), abs=1e-12)


def test_subcritical_not_dobrushin():
    spec = ErgmSpec.build(["edge", "wedge", "triangle"], [-0.7, 0.3, 0.3])
    rep = find_stationary_points(spec)
    assert rep.regime == SUBCRITICAL
    assert not rep.dobrushin


def test_critical_curie_weiss_point():
    # phi(q) = logistic(-2 + 4q) touches the diagonal at 1/2 with slope 1
    spec = ErgmSpec.build(["edge", "wedge"], [-1.0, 1.0])
    rep = find_stationary_points(spec)
    assert rep.regime == CRITICAL
    assert rep.p_star == pytest.approx(0.5, abs=1e-4)


def test_chosen_subcritical_spec(ewt_sub):
    rep = phase_report(ewt_sub)
    assert rep.subcritical
    assert rep.p_star == pytest.approx(0.2985532901139199, abs=1e-12)
    assert attracting(ewt_sub, rep.p_star)


def test_proxies_reduce_for_k0():
    spec = ErgmSpec.erdos_renyi(0.4)
    p = logistic(0.8)
    for n in (5, 64, 128):
        assert variance_proxy_edge(spec, p, n) == p * (1 - p) * math.comb(n, 2)
        assert variance_proxy_degree(spec, p, n) == p * (1 - p) * (n - 1)


def test_proxy_prefactor_above_one_for_ferromagnetic(ewt_sub):
    p = phase_report(ewt_sub).p_star
    vp = variance_proxies(ewt_sub, p, 100)
    assert vp.sigma_n_sq > p * (1 - p) * math.comb(100, 2)
    assert vp.varsigma_n_sq > p * (1 - p) * 99
    assert vp.edge_denominator == pytest.approx(0.6827, abs=1e-3)


def test_proxy_refuses_repelling_point(two_well):
    middle = find_stationary_points(two_well).stationary_points[1].q
    with pytest.raises(NotAttractingError):
        variance_proxy_edge(two_well, middle, 50)
    with pytest.raises(DomainError):
        variance_proxy_edge(two_well, 1.5, 50)


def test_edge_denominator_is_one_minus_phi_slope(two_well):
    # 1 - phi'(p) = 1 - 2p(1-p) H''(p)
    from ergmclt.phase import edge_proxy_denominator
    from ergmclt.model import phi_beta_deriv

    p = TWO_WELL_P
    assert edge_proxy_denominator(two_well, p) == pytest.approx(1 - phi_beta_deriv(two_well, p), abs=1e-12)


def test_grid_and_regime_map(two_well):
    g = phase_grid(two_well, 100)
    assert g.shape == (101, 3)
    assert g[0, 1] == pytest.approx(-1e9, rel=1) or np.isfinite(g[0, 1])
    rows = regime_map(two_well.motifs, np.linspace(-2, 1, 20), np.linspace(0, 1, 20), [0.0], grid=500)
    assert len(rows) == 400
    assert all(r["regime"] in (DOBRUSHIN, SUBCRITICAL, SUPERCRITICAL, CRITICAL, "unresolved") for r in rows)


def test_bad_grid():
    with pytest.raises(DomainError):
        find_stationary_points(ErgmSpec.erdos_renyi(0.1), grid=5)


def test_stationary_points_are_fixed_points(two_well):
    for s in find_stationary_points(two_well).stationary_points:
        assert abs(l_beta_deriv(two_well, s.q, 1)) < 1e-10
        assert phi_beta(two_well, s.q) == pytest.approx(s.q, abs=1e-12)
