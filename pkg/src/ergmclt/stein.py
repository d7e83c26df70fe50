"""Monte Carlo estimates of the Stein error terms for the standardized edge count and degree.

The tilt relating the ERGM ``X`` to an independent ``G(n, p)`` graph ``Y`` is

    g(x) = sum_{j>=1} beta_j (N_{G_j}(x) / n^(v_j - 2) - 2 e_j p^(e_j - 1) E(x)),

with the surrogate penalty ``R`` taken as zero because the sampler never leaves
the density band.  For ``f`` a standardized edge count (or degree) every
``f``-difference is ``(X(e) - Y(e)) / sigma``, so each per-edge term only needs
the indicator ``a_e = |X(e) - Y(e)|`` and the discrete derivative ``d_e g``.

Two ways of treating ``Y`` are offered.  ``integrate_y=True`` replaces ``a_e``
by its conditional mean ``(1 - 2p) X(e) + p`` given ``X``; this is exact
because ``a_e`` is an indicator and lowers the variance.  ``integrate_y=False``
draws an explicit ``Y`` for each sample (the literal tilted pair).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .dynamics import ChainConfig, Sampler, Well, local_fields, make_rng
from .exceptions import ConvergenceError, DomainError
from .graphstate import GraphState, count_hom, edge_index, n_pairs
from .model import ErgmSpec
from .observables import batch_means_se
from .phase import variance_proxy_degree, variance_proxy_edge

EDGE = "edge"
DEGREE = "degree"
MIN_SAMPLES = 100
Y_STREAM_OFFSET = 3_000_000

# columns of the per-sample term table
TERM_NAMES = ("sum_delta1", "sum_delta2", "obs", "t0", "t1", "t1p_first", "t1p_second")


# ---------------------------------------------------------------------------
# tilt and closed forms


def tilting_g(x: GraphState, spec: ErgmSpec, p: float) -> float:
    """Exponential tilt ``g(x)`` of the ERGM against ``G(n, p)`` (with ``R = 0``)."""
    n = x.n
    E = x.edge_count
    total = 0.0
    for m, b in zip(spec.motifs[1:], spec.beta[1:]):
        total += b * (count_hom(x, m) / float(n) ** (m.v - 2) - 2.0 * m.e * p ** (m.e - 1) * E)
    return total


def tilt_centering(spec: ErgmSpec, p: float) -> float:
    """``sum_{j>=1} 2 beta_j e_j p^(e_j - 1)``, the constant removed from each local field."""
    return float(sum(2.0 * b * m.e * p ** (m.e - 1) for m, b in zip(spec.motifs[1:], spec.beta[1:])))


def tilt_derivatives(x: GraphState, spec: ErgmSpec, p: float, edge_ids=None) -> np.ndarray:
    """``d_e g(x) = g(x^{+e}) - g(x^{-e})`` for the given edges (all by default)."""
    fields = local_fields(x, spec, edge_ids)
    return fields - 2.0 * spec.beta[0] - tilt_centering(spec, p)


def delta1_edge_closed(x: GraphState, e, p: float, sigma_sq: float) -> float:
    """``Delta_{1,e}(x) = ((1 - 2p) x(e) + p) / (2 sigma^2)``."""
    xe = _indicator(x, e)
    return ((1.0 - 2.0 * p) * xe + p) / (2.0 * sigma_sq)


def delta2_edge_closed(x: GraphState, e, spec: ErgmSpec, p: float, sigma_sq: float) -> float:
    """``Delta_{2,e}(x) = ((1 - 2p) x(e) + p) d_e g(x) / (2 sigma)``."""
    k = _edge_id(x, e)
    xe = x[k]
    dg = float(tilt_derivatives(x, spec, p, [k])[0])
    return ((1.0 - 2.0 * p) * xe + p) * dg / (2.0 * math.sqrt(sigma_sq))


def _edge_id(x: GraphState, e) -> int:
    if isinstance(e, (tuple, list)):
        return edge_index(x.n, int(e[0]), int(e[1]))
    k = int(e)
    if not 0 <= k < n_pairs(x.n):
        raise DomainError(f"edge id {k} out of range")
    return k


def _indicator(x: GraphState, e) -> int:
    return x[_edge_id(x, e)]


# ---------------------------------------------------------------------------
# generic definitions, evaluated literally on small graphs


def standardized_edge_count(sigma_sq: float) -> Callable[[GraphState], float]:
    s = math.sqrt(sigma_sq)
    return lambda g: g.edge_count / s


def hybrid_bits(xb: np.ndarray, yb: np.ndarray, i: int) -> np.ndarray:
    """``x^{[i]}``: coordinates ``0..i`` from ``x`` and the rest from ``y`` (``i = -1`` gives ``y``)."""
    out = np.array(yb, copy=True)
    out[: i + 1] = xb[: i + 1]
    return out


def replaced_bits(xb: np.ndarray, yb: np.ndarray, i: int) -> np.ndarray:
    """``x^{(i)}``: ``x`` with coordinate ``i`` taken from ``y``."""
    out = np.array(xb, copy=True)
    out[i] = yb[i]
    return out


def _pair_term(xb, yb, i, n, left: Callable, f: Callable) -> float:
    g = lambda b: GraphState.from_bits(n, b)  # noqa: E731
    lhs = left(g(xb)) - left(g(replaced_bits(xb, yb, i)))
    rhs = f(g(hybrid_bits(xb, yb, i))) - f(g(hybrid_bits(xb, yb, i - 1)))
    return 0.5 * lhs * rhs


def delta1_edge_generic(x: GraphState, e, p: float, sigma_sq: float, y: Optional[GraphState] = None,
                        f: Optional[Callable] = None) -> float:
    """``1/2 E[(f(x) - f(x^{(e)})) (f(x^{[e]}) - f(x^{[e-1]}))]`` by exact expectation over ``Y(e)``.

    The other coordinates of ``Y`` are those of ``y`` (empty graph by default);
    for the standardized edge count they cancel.
    """
    n = x.n
    i = _edge_id(x, e)
    f = f or standardized_edge_count(sigma_sq)
    xb = x.to_bits()
    yb = np.zeros_like(xb) if y is None else y.to_bits()
    total = 0.0
    for ye, w in ((0, 1.0 - p), (1, p)):
        yb = yb.copy()
        yb[i] = ye
        total += w * _pair_term(xb, yb, i, n, f, f)
    return total


def delta2_edge_generic_mc(x: GraphState, e, spec: ErgmSpec, p: float, sigma_sq: float, draws: int,
                           rng: np.random.Generator, f: Optional[Callable] = None) -> tuple[float, float]:
    """Monte Carlo estimate of ``1/2 E[(g(x) - g(x^{(e)})) (f(x^{[e]}) - f(x^{[e-1]}))]`` over ``Y ~ G(n, p)``.

    ``g`` is evaluated from full homomorphism counts on both graphs.  Returns
    ``(mean, standard error)``.
    """
    if draws < 2:
        raise DomainError("need at least two draws")
    n = x.n
    i = _edge_id(x, e)
    f = f or standardized_edge_count(sigma_sq)
    gfun = lambda h: tilting_g(h, spec, p)  # noqa: E731
    xb = x.to_bits()
    cache: dict = {}
    vals = np.empty(draws)
    for d in range(draws):
        yb = (rng.random(xb.shape[0]) < p).astype(np.int8)
        key = (int(yb[i]), yb[:i].tobytes(), yb[i + 1 :].tobytes())
        if key not in cache:
            cache[key] = _pair_term(xb, yb, i, n, gfun, f)
        vals[d] = cache[key]
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(draws))


# ---------------------------------------------------------------------------
# per-sample terms


@dataclass
class TiltedPair:
    """An ERGM sample ``X`` with an independent ``G(n, p)`` graph ``Y`` (``None`` when integrated out)."""

    X: GraphState
    Y: Optional[GraphState]
    spec: ErgmSpec
    p: float

    def __post_init__(self):
        if self.Y is not None and self.Y.n != self.X.n:
            raise DomainError("X and Y must have the same number of vertices")


def _selected_edges(n: int, mode: str, v: int) -> np.ndarray:
    if mode == EDGE:
        return np.arange(n_pairs(n))
    if mode == DEGREE:
        if not 0 <= v < n:
            raise DomainError(f"vertex {v} out of range for n={n}")
        return np.array(sorted(edge_index(n, v, w) for w in range(n) if w != v), dtype=np.int64)
    raise DomainError(f"unknown mode {mode!r}")


def scale_sq_for(spec: ErgmSpec, p: float, n: int, mode: str) -> float:
    """The variance proxy matching the mode (``sigma_n^2`` or ``varsigma_n^2``)."""
    if mode == EDGE:
        return variance_proxy_edge(spec, p, n)
    if mode == DEGREE:
        return variance_proxy_degree(spec, p, n)
    raise DomainError(f"unknown mode {mode!r}")


def sample_terms(pair: TiltedPair, scale_sq: float, mode: str = EDGE, v: int = 0) -> np.ndarray:
    """Per-sample contributions, in the order of ``TERM_NAMES``.

    The row holds ``sum_e Delta_1``, ``sum_e Delta_2``, the raw observable and
    the per-sample summands of ``delta_0``, ``delta_1`` and both parts of ``delta_1'``.
    """
    x, spec, p = pair.X, pair.spec, pair.p
    n = x.n
    s = math.sqrt(scale_sq)
    sel = _selected_edges(n, mode, v)
    xb = x.to_bits()[sel].astype(float)
    mean_a = (1.0 - 2.0 * p) * xb + p
    if pair.Y is None:
        a = mean_a
    else:
        a = np.abs(xb - pair.Y.to_bits()[sel])
    dg = tilt_derivatives(x, spec, p, sel)
    adg = np.abs(dg)
    ex = np.exp(adg)
    obs = float(x.edge_count) if mode == EDGE else float(x.degree(v))
    return np.array([
        mean_a.sum() / (2.0 * scale_sq),
        (mean_a * dg).sum() / (2.0 * s),
        obs,
        (a * ex * dg * dg * (adg + 1.0 / s)).sum() / s,
        a.sum() / s ** 3,
        (a * ex * adg).sum() / scale_sq,
        abs((xb - p).sum()) / scale_sq,
    ])


# ---------------------------------------------------------------------------
# reduction


def _stats(T: np.ndarray, scale_sq: float) -> np.ndarray:
    """``(b, delta_0, delta_1, delta_1'(first), delta_1'(second), delta_2, delta_3)`` from a term table."""
    s = math.sqrt(scale_sq)
    S1, S2, obs = T[:, 0], T[:, 1], T[:, 2]
    b = S1.mean()
    fval = (obs - obs.mean()) / s
    return np.array([
        b,
        T[:, 3].mean(),
        T[:, 4].mean(),
        T[:, 5].mean(),
        T[:, 6].mean(),
        S1.std(ddof=1),
        (S2 - (1.0 - b) * fval).std(ddof=1),
    ])


def jackknife(T: np.ndarray, scale_sq: float, blocks: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Full-sample statistics and delete-one-block jackknife standard errors."""
    full = _stats(T, scale_sq)
    m = T.shape[0] // blocks
    if blocks < 2 or m < 2:
        return full, np.full_like(full, np.nan)
    idx = np.arange(m * blocks).reshape(blocks, m)
    reps = np.array([_stats(np.delete(T, idx[k], axis=0), scale_sq) for k in range(blocks)])
    se = np.sqrt((blocks - 1) / blocks * ((reps - reps.mean(axis=0)) ** 2).sum(axis=0))
    return full, se


@dataclass
class SteinReport:
    n: int
    mode: str
    vertex: Optional[int]
    p: float
    scale_sq: float
    samples: int
    b_hat: float
    b_closed: float
    delta0: float
    delta1: float
    delta1_prime: float
    delta2: float
    delta3: float
    se: dict = field(default_factory=dict)
    delta1_prime_parts: tuple = (0.0, 0.0)
    integrate_y: bool = True

    @property
    def was_sum(self) -> float:
        """``(delta_0 + delta_1 + delta_2 + delta_3) / |b|``; the absolute constant is left out."""
        return (self.delta0 + self.delta1 + self.delta2 + self.delta3) / abs(self.b_hat)

    @property
    def kol_sum(self) -> float:
        return (self.delta0 + self.delta1_prime + self.delta2 + self.delta3) / abs(self.b_hat)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delta1_prime_parts"] = list(self.delta1_prime_parts)
        d["was_sum"] = self.was_sum
        d["kol_sum"] = self.kol_sum
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def b_closed_form(n: int, p: float, scale_sq: float, mode: str = EDGE) -> float:
    """Expected ``sum_e Delta_1`` when ``E[X(e)] = p``."""
    count = n_pairs(n) if mode == EDGE else n - 1
    return count * p * (1.0 - p) / scale_sq


def reduce_terms(T: np.ndarray, n: int, p: float, scale_sq: float, mode: str = EDGE, v: Optional[int] = None,
                 blocks: int = 20, integrate_y: bool = True) -> SteinReport:
    """Turn a per-sample term table into a ``SteinReport``."""
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[1] != len(TERM_NAMES):
        raise DomainError(f"term table must have {len(TERM_NAMES)} columns")
    if T.shape[0] < MIN_SAMPLES:
        raise DomainError(f"need at least {MIN_SAMPLES} samples, got {T.shape[0]}")
    full, se = jackknife(T, scale_sq, blocks)
    if not np.all(np.isfinite(full)):
        raise ConvergenceError("non-finite Stein term (variance overflow)")
    names = ("b_hat", "delta0", "delta1", "d1p_first", "d1p_second", "delta2", "delta3")
    se_d = {k: float(s) for k, s in zip(names, se)}
    # both delta_1' parts are means over the same samples; combine their jackknife draws
    se_d["delta1_prime"] = float(math.hypot(se[3], se[4]))
    return SteinReport(
        n=n,
        mode=mode,
        vertex=v if mode == DEGREE else None,
        p=p,
        scale_sq=scale_sq,
        samples=int(T.shape[0]),
        b_hat=float(full[0]),
        b_closed=b_closed_form(n, p, scale_sq, mode),
        delta0=float(full[1]),
        delta1=float(full[2]),
        delta1_prime=float(full[3] + full[4]),
        delta2=float(full[5]),
        delta3=float(full[6]),
        se=se_d,
        delta1_prime_parts=(float(full[3]), float(full[4])),
        integrate_y=integrate_y,
    )


def estimate_deltas(pairs: Iterable[TiltedPair], spec: ErgmSpec, p: float, scale_sq: float, m: Optional[int] = None,
                    mode: str = EDGE, v: int = 0, blocks: int = 20) -> tuple[SteinReport, np.ndarray]:
    """Estimate ``b`` and the error terms from a stream of tilted pairs.

    Consumes at most ``m`` pairs.  Returns the report and the per-sample table.
    """
    rows = []
    integrated = True
    n = None
    for k, pair in enumerate(pairs):
        if m is not None and k >= m:
            break
        if pair.spec != spec:
            raise DomainError("pair spec differs from the estimator spec")
        if n is None:
            n = pair.X.n
        elif pair.X.n != n:
            raise DomainError("pairs of different sizes in one stream")
        integrated = integrated and pair.Y is None
        rows.append(sample_terms(pair, scale_sq, mode, v))
    if not rows:
        raise DomainError("no samples")
    T = np.array(rows)
    return reduce_terms(T, n, p, scale_sq, mode, v, blocks, integrated), T


def estimate_b(samples: Sequence, p: float, scale_sq: float, mode: str = EDGE, v: int = 0,
               batches: int = 20) -> tuple[float, float]:
    """``b_hat`` as the mean of ``sum_e Delta_1`` and its batch-means standard error.

    ``samples`` may be graphs or raw edge counts (degrees in degree mode).
    """
    vals = []
    n = None
    for s in samples:
        if isinstance(s, GraphState):
            n = s.n
            vals.append(s.edge_count if mode == EDGE else s.degree(v))
        else:
            vals.append(float(s))
    if len(vals) < 2:
        raise DomainError("need at least two samples")
    obs = np.asarray(vals, dtype=float)
    if np.var(obs) == 0.0 and len(vals) > 2:
        raise DomainError("degenerate batch: observable is constant")
    if mode == EDGE:
        count = None if n is None else n_pairs(n)
    else:
        count = None if n is None else n - 1
    if count is None:
        raise DomainError("raw values need graphs to infer n; pass GraphState samples")
    # sum_e ((1-2p) X(e) + p) = (1-2p) * obs + p * count
    S1 = ((1.0 - 2.0 * p) * obs + p * count) / (2.0 * scale_sq)
    return float(S1.mean()), batch_means_se(S1, batches)


# ---------------------------------------------------------------------------
# experiment driver


def pair_stream(cfg: ChainConfig, p: float, integrate_y: bool = True, force: bool = False,
                allow_local_well: bool = False) -> Iterable[TiltedPair]:
    """Tilted pairs from a chain; ``Y`` comes from its own stream, independent of the chain's."""
    yrng = make_rng(cfg.seed, Y_STREAM_OFFSET + cfg.chain_index)
    for x in Sampler(cfg, force, allow_local_well):
        y = None if integrate_y else GraphState.erdos_renyi(cfg.n, p, yrng)
        yield TiltedPair(x, y, cfg.spec, p)


def stein_experiment(spec: ErgmSpec, n: int, samples: int, seed: int = 0, mode: str = EDGE, v: int = 0,
                     p: Optional[float] = None, well: Optional[Well] = None, integrate_y: bool = True,
                     burn_in: Optional[int] = None, thinning: Optional[int] = None, chain_index: int = 0,
                     force: bool = False, blocks: int = 20) -> tuple[SteinReport, np.ndarray]:
    """Run one chain at size ``n`` and estimate the Stein terms for the chosen mode."""
    from .phase import phase_report

    if p is None:
        p = well.p_star if well is not None else phase_report(spec).p_star
    scale_sq = scale_sq_for(spec, p, n, mode)
    cfg = ChainConfig(spec, n, well=well, burn_in=burn_in, thinning=thinning, samples=samples, seed=seed,
                      chain_index=chain_index)
    return estimate_deltas(pair_stream(cfg, p, integrate_y, force), spec, p, scale_sq, mode=mode, v=v, blocks=blocks)


def terms_to_csv(T: np.ndarray, scale_sq: float, path, mode: str = EDGE) -> None:
    """Per-sample ``sum_e Delta_1``, ``sum_e Delta_2`` and centred ``f``."""
    s = math.sqrt(scale_sq)
    obs = T[:, 2]
    fval = (obs - obs.mean()) / s
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema: ergmclt.stein/1 mode={mode}\n")
        fh.write("sample,sum_delta1,sum_delta2,f\n")
        for i in range(T.shape[0]):
            fh.write(f"{i},{T[i, 0]!r},{T[i, 1]!r},{fval[i]!r}\n")
