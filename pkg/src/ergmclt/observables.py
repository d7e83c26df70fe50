"""Observables on graph samples, Hajek residuals, and distances to the standard normal."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .exceptions import DomainError
from .graphstate import (
    GraphState,
    count_hom,
    count_hom_at_vertex,
    count_hom_rooted,
    edge_pair,
    r_statistic,
)
from .model import MotifGraph

DEGENERATE_VAR = 1e-12


class DegenerateBatchWarning(UserWarning):
    """A standardized column has (numerically) zero variance."""


# ---------------------------------------------------------------------------
# observable kinds


class Observable:
    """Base class: ``name`` for CSV headers and ``evaluate(x)`` returning a float."""

    name = "observable"

    def evaluate(self, x: GraphState) -> float:
        raise NotImplementedError

    def check(self, n: int) -> None:
        """Raise if parameters are out of range for graphs on ``n`` vertices."""

    def __call__(self, x: GraphState) -> float:
        # checked entry point; chains call evaluate directly after one check
        self.check(x.n)
        return self.evaluate(x)


def _check_vertex(v: int, n: int) -> None:
    if not 0 <= v < n:
        raise DomainError(f"vertex {v} out of range for n={n}")


@dataclass(frozen=True)
class EdgeCount(Observable):
    @property
    def name(self):
        return "edges"

    def evaluate(self, x):
        return float(x.edge_count)


@dataclass(frozen=True)
class Degree(Observable):
    v: int = 0

    @property
    def name(self):
        return f"deg_{self.v}"

    def check(self, n):
        _check_vertex(self.v, n)

    def evaluate(self, x):
        return float(x.deg[self.v])


@dataclass(frozen=True)
class HomCount(Observable):
    G: MotifGraph = field(default_factory=MotifGraph.triangle)

    @property
    def name(self):
        return f"N_{self.G.label}"

    def evaluate(self, x):
        return float(count_hom(x, self.G))


@dataclass(frozen=True)
class RootedHomCount(Observable):
    G: MotifGraph = field(default_factory=MotifGraph.triangle)
    rho: int = 0
    v: int = 0

    @property
    def name(self):
        return f"N_{self.G.label}_{self.rho}to{self.v}"

    def check(self, n):
        _check_vertex(self.v, n)
        if not 0 <= self.rho < self.G.v:
            raise DomainError(f"motif vertex {self.rho} out of range")

    def evaluate(self, x):
        return float(count_hom_rooted(x, self.G, self.rho, self.v))


@dataclass(frozen=True)
class VertexHomCount(Observable):
    G: MotifGraph = field(default_factory=MotifGraph.triangle)
    v: int = 0

    @property
    def name(self):
        return f"N_{self.G.label}_at{self.v}"

    def check(self, n):
        _check_vertex(self.v, n)

    def evaluate(self, x):
        return float(count_hom_at_vertex(x, self.G, self.v))


@dataclass(frozen=True)
class HajekResidualGlobal(Observable):
    G: MotifGraph = field(default_factory=MotifGraph.triangle)
    p: float = 0.5

    @property
    def name(self):
        return f"hajek_{self.G.label}"

    def evaluate(self, x):
        return hajek_residual_global(x, self.G, self.p)


@dataclass(frozen=True)
class HajekResidualRooted(Observable):
    G: MotifGraph = field(default_factory=MotifGraph.triangle)
    rho: int = 0
    v: int = 0
    p: float = 0.5

    @property
    def name(self):
        return f"hajek_{self.G.label}_{self.rho}to{self.v}"

    def check(self, n):
        _check_vertex(self.v, n)
        if not 0 <= self.rho < self.G.v:
            raise DomainError(f"motif vertex {self.rho} out of range")

    def evaluate(self, x):
        return hajek_residual_rooted(x, self.G, self.rho, self.v, self.p)


@dataclass(frozen=True)
class RStat(Observable):
    G: MotifGraph = field(default_factory=MotifGraph.triangle)
    e: int = 0

    @property
    def name(self):
        return f"r_{self.G.label}_e{self.e}"

    def check(self, n):
        edge_pair(n, self.e)

    def evaluate(self, x):
        return r_statistic(x, self.G, self.e).value


def parse_observable(text: str, p: float = 0.5) -> Observable:
    """Parse ``edges``, ``deg:V``, ``hom:G``, ``rooted:G:RHO:V``, ``vertex:G:V``,
    ``hajek:G``, ``hajek_rooted:G:RHO:V`` or ``r:G:E``."""
    parts = text.strip().split(":")
    kind = parts[0]
    try:
        if kind == "edges" and len(parts) == 1:
            return EdgeCount()
        if kind == "deg" and len(parts) == 2:
            return Degree(int(parts[1]))
        if kind == "hom" and len(parts) == 2:
            return HomCount(MotifGraph.from_name(parts[1]))
        if kind == "rooted" and len(parts) == 4:
            return RootedHomCount(MotifGraph.from_name(parts[1]), int(parts[2]), int(parts[3]))
        if kind == "vertex" and len(parts) == 3:
            return VertexHomCount(MotifGraph.from_name(parts[1]), int(parts[2]))
        if kind == "hajek" and len(parts) == 2:
            return HajekResidualGlobal(MotifGraph.from_name(parts[1]), p)
        if kind == "hajek_rooted" and len(parts) == 4:
            return HajekResidualRooted(MotifGraph.from_name(parts[1]), int(parts[2]), int(parts[3]), p)
        if kind == "r" and len(parts) == 3:
            return RStat(MotifGraph.from_name(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise DomainError(f"bad observable {text!r}: {exc}") from exc
    raise DomainError(f"unknown observable {text!r}")


# ---------------------------------------------------------------------------
# Hajek residuals


def hajek_residual_global(x: GraphState, G: MotifGraph, p: float) -> float:
    """``N_G(x) - 2 e p^(e-1) n^(v-2) E(x)``."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0,1), got {p}")
    n = x.n
    proj = 2.0 * G.e * p ** (G.e - 1) * float(n) ** (G.v - 2) * x.edge_count
    return float(count_hom(x, G)) - proj


def hajek_residual_rooted(x: GraphState, G: MotifGraph, rho: int, v: int, p: float) -> float:
    """``N_G^{rho -> v}(x) - d_rho p^(e-1) n^(v-2) deg_v(x)``."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0,1), got {p}")
    n = x.n
    d_rho = G.degrees[rho]
    proj = d_rho * p ** (G.e - 1) * float(n) ** (G.v - 2) * int(x.deg[v])
    return float(count_hom_rooted(x, G, rho, v)) - proj


# ---------------------------------------------------------------------------
# batches and standardization


@dataclass
class SampleBatch:
    """Observable values, one row per retained sample."""

    names: list[str]
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise DomainError("values must be a (samples, observables) matrix matching names")
        if np.isnan(self.values).any():
            raise DomainError("batch has missing cells")

    @classmethod
    def from_run(cls, run, **meta) -> "SampleBatch":
        return cls(list(run.names), run.values, dict(meta))

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def __len__(self) -> int:
        return self.values.shape[0]


def standardize(values, proxy: float, center: Optional[float] = None) -> np.ndarray:
    """``(x_i - mean) / sqrt(proxy)``; the batch mean is used unless ``center`` is given."""
    z = np.asarray(values, dtype=float)
    if z.size == 0:
        raise DomainError("empty batch")
    if not proxy > 0:
        raise DomainError(f"variance proxy must be positive, got {proxy}")
    if z.var() < DEGENERATE_VAR:
        warnings.warn("degenerate batch: sample variance below 1e-12", DegenerateBatchWarning, stacklevel=2)
    c = z.mean() if center is None else float(center)
    return (z - c) / math.sqrt(proxy)


# ---------------------------------------------------------------------------
# distances to N(0, 1)


def kolmogorov_distance_to_normal(z) -> float:
    """``sup_s |F_m(s) - Phi(s)|`` using both one-sided limits at the sample points."""
    s = np.sort(np.asarray(z, dtype=float).ravel())
    m = s.size
    if m == 0:
        raise DomainError("empty sample")
    cdf = ndtr(s)
    # F just after s_(i) is i/m at the last tie; just before is (first index)/m
    after = np.searchsorted(s, s, side="right") / m
    before = np.searchsorted(s, s, side="left") / m
    return float(max(np.max(np.abs(after - cdf)), np.max(np.abs(cdf - before))))


def _gauss_antideriv(s):
    """``G(s) = s Phi(s) + phi(s)``, an antiderivative of ``Phi``; finite at +-inf limits handled by callers."""
    s = np.asarray(s, dtype=float)
    return s * ndtr(s) + np.exp(-0.5 * s * s) / math.sqrt(2 * math.pi)


def wasserstein_distance_to_normal(z) -> float:
    """``int |F_m(s) - Phi(s)| ds`` computed exactly piece by piece."""
    s = np.sort(np.asarray(z, dtype=float).ravel())
    m = s.size
    if m == 0:
        raise DomainError("empty sample")
    # left tail: int_{-inf}^{s_1} Phi = G(s_1); right tail: int_{s_m}^{inf} (1 - Phi) = G(-s_m)
    total = float(_gauss_antideriv(s[0])) + float(_gauss_antideriv(-s[-1]))
    if m > 1:
        a = s[:-1]
        b = s[1:]
        c = np.arange(1, m) / m  # ECDF level on [a, b)
        keep = b > a
        a, b, c = a[keep], b[keep], c[keep]
        # split at t = Phi^{-1}(c) when it falls inside the interval
        t = np.clip(ndtri(c), a, b)
        Ga, Gb, Gt = _gauss_antideriv(a), _gauss_antideriv(b), _gauss_antideriv(t)
        # on [a, t] Phi <= c, on [t, b] Phi >= c
        left = c * (t - a) - (Gt - Ga)
        right = (Gb - Gt) - c * (b - t)
        total += float(np.sum(left + right))
    return total


# ---------------------------------------------------------------------------
# residual variance scans


@dataclass
class ResidualScanRow:
    n: int
    variance: float
    normalizer: float
    ratio: float
    samples: int


@dataclass
class ResidualScan:
    rows: list[ResidualScanRow]
    slope: float
    intercept: float
    kind: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "slope": self.slope,
            "intercept": self.intercept,
            "rows": [r.__dict__ for r in self.rows],
        }


def loglog_slope(sizes: Sequence[float], variances: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and intercept of ``log Var`` against ``log n``."""
    ln = np.log(np.asarray(sizes, dtype=float))
    if np.unique(ln).shape[0] < 2:
        return math.nan, math.nan
    lv = np.log(np.maximum(np.asarray(variances, dtype=float), 1e-300))
    slope, intercept = np.polyfit(ln, lv, 1)
    return float(slope), float(intercept)


def residual_scan_table(G: MotifGraph, sizes: Sequence[int], variances: Sequence[float], samples: Sequence[int],
                        rooted: bool = False) -> ResidualScan:
    """Tabulate residual variances against the naive scale ``n^(2v-2)``.

    The naive scale is the order of ``Var[N_G]`` itself; residuals should fall
    below it by a power of ``n`` (about one for global, 1.5 for rooted residuals).
    """
    rows = []
    for n, var, m in zip(sizes, variances, samples):
        norm = float(n) ** (2 * G.v - 2)
        rows.append(ResidualScanRow(int(n), float(var), norm, float(var) / norm, int(m)))
    if all(r.variance == 0 for r in rows):
        slope, intercept = 0.0, float("-inf")
    else:
        slope, intercept = loglog_slope(sizes, variances)
    return ResidualScan(rows, slope, intercept, "rooted" if rooted else "global")


def residual_variance_scan(spec, G: MotifGraph, sizes: Sequence[int], samples: int, seed: int = 0,
                           rooted: bool = False, rho: int = 0, v: int = 0, p: Optional[float] = None,
                           burn_in: Optional[int] = None, thinning: Optional[int] = None, force: bool = False,
                           workers: int = 1) -> ResidualScan:
    """Empirical residual variances over ``sizes`` from stationary chains at the optimal density."""
    from .dynamics import ChainConfig, run_chains
    from .phase import phase_report

    rep = phase_report(spec)
    p = rep.p_star if p is None else p
    if rooted:
        obs = HajekResidualRooted(G, rho, v, p)
    else:
        obs = HajekResidualGlobal(G, p)
    cfgs = [ChainConfig(spec, int(n), burn_in=burn_in, thinning=thinning, samples=samples, seed=seed, chain_index=i)
            for i, n in enumerate(sizes)]
    runs = run_chains(cfgs, [obs], workers=workers, force=force)
    variances = [float(np.var(r.values[:, 0], ddof=1)) for r in runs]
    return residual_scan_table(G, sizes, variances, [samples] * len(sizes), rooted)


def batch_means_se(values, batches: int = 20) -> float:
    """Standard error of the mean by non-overlapping batch means."""
    z = np.asarray(values, dtype=float)
    m = z.size // batches
    if m < 1:
        return float(z.std(ddof=1) / math.sqrt(max(z.size, 1)))
    means = z[: m * batches].reshape(batches, m).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))
