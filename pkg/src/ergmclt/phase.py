"""Stationary points of ``L_beta``, regime classification and CLT variance proxies."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .exceptions import ConvergenceError, DomainError, NotAttractingError
from .model import (
    ErgmSpec,
    hamiltonian_scalar_deriv,
    l_beta,
    l_beta_deriv,
    phi_beta,
    phi_beta_deriv,
)

DOBRUSHIN = "Dobrushin"
SUBCRITICAL = "Subcritical"
SUPERCRITICAL = "Supercritical"
CRITICAL = "Critical"

BOUNDARY_DELTA = 1e-6
TIE_TOL = 1e-9
FLAT_TOL = 1e-8


@dataclass(frozen=True)
class StationaryPoint:
    q: float
    value: float
    curvature: float

    @property
    def kind(self) -> str:
        if self.curvature < -FLAT_TOL:
            return "max"
        if self.curvature > FLAT_TOL:
            return "min"
        return "flat"


@dataclass
class PhaseReport:
    stationary_points: list[StationaryPoint]
    local_maxima: list[float]
    M_beta: list[float]
    U_beta: list[float]
    regime: str
    p_star: float
    dobrushin: bool
    tol: float = 1e-12
    fixed_point_residuals: list[float] = field(default_factory=list)

    @property
    def coexistence(self) -> bool:
        return len(self.M_beta) > 1

    @property
    def subcritical(self) -> bool:
        return self.regime in (SUBCRITICAL, DOBRUSHIN)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stationary_points"] = [
            {"q": s.q, "L": s.value, "L2": s.curvature, "kind": s.kind} for s in self.stationary_points
        ]
        d["coexistence"] = self.coexistence
        return d


def _refine(spec: ErgmSpec, a: float, b: float, tol: float) -> float:
    f = lambda q: l_beta_deriv(spec, q, 1)  # noqa: E731
    try:
        q = brentq(f, a, b, xtol=1e-15, rtol=1e-15, maxiter=500)
    except (ValueError, RuntimeError) as exc:
        raise ConvergenceError(f"root refinement failed on [{a}, {b}]: {exc}") from exc
    # Newton polish; keep the bracket if a step leaves it
    for _ in range(8):
        d1 = f(q)
        if abs(d1) < tol:
            break
        d2 = l_beta_deriv(spec, q, 2)
        if d2 == 0:
            break
        step = q - d1 / d2
        if not a <= step <= b:
            break
        q = step
    if abs(f(q)) > max(tol, 1e-9):
        raise ConvergenceError(f"|L'| = {abs(f(q)):.3g} at q={q} exceeds tolerance")
    return float(q)


def find_stationary_points(spec: ErgmSpec, grid: int = 10_000, tol: float = 1e-12) -> PhaseReport:
    """Locate and classify all stationary points of ``L_beta`` in ``(0, 1)``."""
    if grid < 100:
        raise DomainError("grid must be at least 100")
    if tol <= 0:
        raise DomainError("tol must be positive")
    qs = np.linspace(BOUNDARY_DELTA, 1 - BOUNDARY_DELTA, grid + 1)
    d1 = np.asarray(l_beta_deriv(spec, qs, 1))
    roots: list[float] = []
    for i in range(grid):
        a, b = d1[i], d1[i + 1]
        if a == 0.0:
            roots.append(float(qs[i]))
        elif a * b < 0:
            roots.append(_refine(spec, qs[i], qs[i + 1], tol))
    if d1[-1] == 0.0:
        roots.append(float(qs[-1]))
    # tangential roots: |L'| dips to ~0 without changing sign
    ad = np.abs(d1)
    for i in range(1, grid):
        if ad[i] <= ad[i - 1] and ad[i] <= ad[i + 1] and d1[i - 1] * d1[i + 1] > 0:
            res = minimize_scalar(
                lambda q: abs(l_beta_deriv(spec, q, 1)),
                bounds=(qs[i - 1], qs[i + 1]),
                method="bounded",
                options={"xatol": 1e-14},
            )
            if res.fun < 1e-9 and not any(abs(res.x - r) < 1e-6 for r in roots):
                roots.append(float(res.x))
    if not roots:
        raise ConvergenceError("no stationary point of L_beta found")
    roots.sort()
    pts = [StationaryPoint(q, float(l_beta(spec, q)), float(l_beta_deriv(spec, q, 2))) for q in roots]
    maxima = [s for s in pts if s.kind in ("max", "flat")]
    candidates = maxima or pts
    best = max(s.value for s in candidates)
    M = [s for s in candidates if best - s.value < TIE_TOL]
    U = [s for s in M if s.kind == "max"]
    dob = float(hamiltonian_scalar_deriv(spec, 1.0, 2)) < 2.0
    if len(U) < len(M):
        regime = CRITICAL
    elif len(pts) == 1 and pts[0].kind == "max":
        regime = DOBRUSHIN if dob else SUBCRITICAL
    elif len(pts) > 1:
        regime = SUPERCRITICAL
    else:
        regime = CRITICAL
    p_star = (U or M)[0].q
    return PhaseReport(
        stationary_points=pts,
        local_maxima=[s.q for s in pts if s.kind == "max"],
        M_beta=[s.q for s in M],
        U_beta=[s.q for s in U],
        regime=regime,
        p_star=p_star,
        dobrushin=regime == DOBRUSHIN,
        tol=tol,
        fixed_point_residuals=[abs(float(phi_beta(spec, s.q)) - s.q) for s in pts],
    )


@lru_cache(maxsize=128)
def phase_report(spec: ErgmSpec) -> PhaseReport:
    """Cached default-resolution report."""
    return find_stationary_points(spec)


def edge_proxy_denominator(spec: ErgmSpec, p: float) -> float:
    """``1 - 2p(1-p) sum_{j>=1} beta_j e_j (e_j - 1) p^(e_j - 2)``."""
    s = 0.0
    for m, b in zip(spec.motifs[1:], spec.beta[1:]):
        if m.e >= 2:
            s += b * m.e * (m.e - 1) * p ** (m.e - 2)
    return 1.0 - 2.0 * p * (1 - p) * s


def degree_proxy_denominator(spec: ErgmSpec, p: float) -> float:
    """``1 - p(1-p) sum_{j>=1} beta_j p^(e_j - 2) sum_rho d_rho (d_rho - 1)``."""
    s = 0.0
    for m, b in zip(spec.motifs[1:], spec.beta[1:]):
        ds = m.degree_square_sum()
        if ds:
            s += b * p ** (m.e - 2) * ds
    return 1.0 - p * (1 - p) * s


def variance_proxy_edge(spec: ErgmSpec, p: float, n: int) -> float:
    """Edge-count variance proxy ``sigma_n^2``."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0,1), got {p}")
    den = edge_proxy_denominator(spec, p)
    if den <= 0:
        raise NotAttractingError(
            f"2p(1-p) sum beta_j e_j(e_j-1) p^(e_j-2) = {1 - den:.6g} >= 1 at p={p}: "
            "p is not an attracting fixed point (need phi_beta'(p) < 1)"
        )
    return p * (1 - p) * math.comb(n, 2) / den


def variance_proxy_degree(spec: ErgmSpec, p: float, n: int) -> float:
    """Vertex-degree variance proxy ``varsigma_n^2``."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0,1), got {p}")
    den = degree_proxy_denominator(spec, p)
    if den <= 0:
        raise NotAttractingError(
            f"p(1-p) sum beta_j p^(e_j-2) sum d_rho(d_rho-1) = {1 - den:.6g} >= 1 at p={p}"
        )
    return p * (1 - p) * (n - 1) / den


@dataclass(frozen=True)
class VarianceProxies:
    sigma_n_sq: float
    varsigma_n_sq: float
    edge_denominator: float
    degree_denominator: float


def variance_proxies(spec: ErgmSpec, p: float, n: int) -> VarianceProxies:
    return VarianceProxies(
        variance_proxy_edge(spec, p, n),
        variance_proxy_degree(spec, p, n),
        edge_proxy_denominator(spec, p),
        degree_proxy_denominator(spec, p),
    )


def phase_grid(spec: ErgmSpec, grid: int = 1000) -> np.ndarray:
    """Rows ``(q, L_beta(q), phi_beta(q))`` on a uniform grid over ``[0, 1]``."""
    qs = np.linspace(0.0, 1.0, grid + 1)
    return np.column_stack([qs, l_beta(spec, qs), phi_beta(spec, qs)])


def regime_map(motifs, beta0_values, beta1_values, beta2_values=(0.0,), grid: int = 2000) -> list[dict]:
    """Regime and optimal density over a grid of parameters (first three motifs)."""
    rows = []
    for b0 in beta0_values:
        for b1 in beta1_values:
            for b2 in beta2_values:
                beta = [b0, b1, b2][: len(motifs)]
                spec = ErgmSpec(tuple(motifs), tuple(beta))
                try:
                    rep = find_stationary_points(spec, grid=grid)
                    rows.append({"beta": beta, "regime": rep.regime, "p": rep.p_star})
                except ConvergenceError:
                    rows.append({"beta": beta, "regime": "unresolved", "p": float("nan")})
    return rows


def attracting(spec: ErgmSpec, p: float) -> bool:
    return float(phi_beta_deriv(spec, p)) < 1.0
