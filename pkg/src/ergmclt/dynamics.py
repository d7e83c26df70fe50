"""Glauber dynamics for ERGMs: free and well-conditioned sampling, monotone coupling.

The well around a density ``p`` is an edge-density band ``[p - eta, p + eta]``.
Conditioned dynamics propose a resample as usual and reject any move that
would leave the band; rejections are counted because they are the only event
that can break the order of a monotone coupling.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from . import _kernels as K
from .exceptions import ConfigError, CriticalRegimeError, DomainError
from .graphstate import (
    GraphState,
    _scratch,
    count_hom_delta_selected,
    delta_plans,
    edge_index,
    edge_pair,
    edge_pairs,
    n_pairs,
    r_statistic,
    stack_plans,
)
from .model import ErgmSpec, MotifGraph, logistic
from .phase import CRITICAL, PhaseReport, phase_report

RNG_CHUNK = 1 << 18


def make_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based stream for chain ``index`` under master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Well:
    """Edge-density band ``[p_star - eta, p_star + eta]``."""

    p_star: float
    eta: float

    def __post_init__(self):
        if not 0.0 < self.p_star < 1.0:
            raise ConfigError(f"well centre must lie in (0,1), got {self.p_star}")
        if not 0.0 < self.eta < min(self.p_star, 1.0 - self.p_star):
            raise ConfigError(
                f"band half-width {self.eta} must lie in (0, min(p, 1-p)) = (0, {min(self.p_star, 1 - self.p_star)})"
            )

    def bounds(self, n: int) -> tuple[int, int]:
        """Inclusive edge-count bounds of the band."""
        N = n_pairs(n)
        lo = math.ceil((self.p_star - self.eta) * N - 1e-9)
        hi = math.floor((self.p_star + self.eta) * N + 1e-9)
        return lo, hi

    def contains(self, x: GraphState) -> bool:
        lo, hi = self.bounds(x.n)
        return lo <= x.edge_count <= hi


@dataclass(frozen=True)
class Init:
    """Initial state: ``er`` (with ``p``), ``empty``, ``complete`` or ``explicit`` (with ``graph``)."""

    kind: str = "er"
    p: Optional[float] = None
    graph: Optional[GraphState] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("er", "empty", "complete", "explicit"):
            raise ConfigError(f"unknown init kind {self.kind!r}")
        if self.kind == "explicit" and self.graph is None:
            raise ConfigError("explicit init needs a graph")
        if self.p is not None and not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"init p must lie in [0,1], got {self.p}")

    def make(self, n: int, rng: np.random.Generator, default_p: float) -> GraphState:
        if self.kind == "empty":
            return GraphState.empty(n)
        if self.kind == "complete":
            return GraphState.complete(n)
        if self.kind == "explicit":
            if self.graph.n != n:
                raise ConfigError(f"explicit init has n={self.graph.n}, config has n={n}")
            return self.graph.copy()
        return GraphState.erdos_renyi(n, self.p if self.p is not None else default_p, rng)


@dataclass(frozen=True)
class ChainConfig:
    spec: ErgmSpec
    n: int
    well: Optional[Well] = None
    init: Init = Init()
    burn_in: Optional[int] = None
    thinning: Optional[int] = None
    samples: int = 1000
    seed: int = 0
    chain_index: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"n must be at least 2, got {self.n}")
        if self.spec.max_motif_vertices > K.MAXV:
            raise ConfigError(f"motifs with more than {K.MAXV} vertices are not supported")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        if self.thinning is not None and self.thinning < 1:
            raise ConfigError("thinning must be >= 1")
        if self.samples < 0:
            raise ConfigError("samples must be >= 0")

    @property
    def burn_in_steps(self) -> int:
        return self.n ** 3 if self.burn_in is None else int(self.burn_in)

    @property
    def thinning_steps(self) -> int:
        return n_pairs(self.n) if self.thinning is None else int(self.thinning)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "n": self.n,
            "well": None if self.well is None else {"p_star": self.well.p_star, "eta": self.well.eta},
            "init": {"kind": self.init.kind, "p": self.init.p},
            "burn_in": self.burn_in_steps,
            "thinning": self.thinning_steps,
            "samples": self.samples,
            "seed": self.seed,
            "chain_index": self.chain_index,
        }


def default_eta(report: PhaseReport, p: float) -> float:
    """Band half-width: 0.05, capped by half the gap to the nearest other stationary point and by min(p,1-p)/2."""
    eta = 0.05
    for s in report.stationary_points:
        if abs(s.q - p) > 1e-9:
            eta = min(eta, 0.5 * abs(s.q - p))
    return min(eta, 0.5 * min(p, 1 - p))


def check_regime(spec: ErgmSpec, well: Optional[Well], force: bool = False, allow_local_well: bool = False) -> PhaseReport:
    """Refuse critical specs and wells that are not around a global maximizer, unless permitted."""
    rep = phase_report(spec)
    if rep.regime == CRITICAL and not force:
        raise CriticalRegimeError(
            "spec is in the critical regime, where Gaussian fluctuations are not expected; pass force to run anyway"
        )
    if well is not None:
        near = lambda qs: any(abs(q - well.p_star) < 1e-6 for q in qs)  # noqa: E731
        if not near(rep.M_beta):
            if not near(rep.local_maxima):
                if not force:
                    raise ConfigError(f"well centre {well.p_star} is not a local maximizer of L_beta")
            elif not allow_local_well:
                raise ConfigError(
                    f"well centre {well.p_star} is a non-global local maximizer; enable the local-well flag to sample it"
                )
    return rep


# ---------------------------------------------------------------------------
# compiled local field


class SpecPlans:
    """Delta plans of every motif stacked for the update kernels at a given ``n``.

    Each plan row points at its motif's coefficient ``beta_j / n^(v_j - 2)``;
    single-edge motifs contribute the constant ``2 beta_j`` instead.
    """

    def __init__(self, spec: ErgmSpec, n: int):
        rows: list = []
        slots: list[int] = []
        coef = []
        const = 0.0
        for m, b in zip(spec.motifs, spec.beta):
            if m.e == 1:
                # N(x, e) = 2 n^(v-2) for a single edge plus isolated vertices
                const += 2.0 * b
                continue
            if b == 0.0:
                continue
            pl = delta_plans(m)
            rows += pl
            slots += [len(coef)] * len(pl)
            coef.append(b / float(n) ** (m.v - 2))
        self.n = n
        self.plans = stack_plans(rows, slots) if rows else np.zeros((0, K.STRIDE), dtype=np.int64)
        self.coef = np.array(coef if coef else [0.0], dtype=np.float64)
        self.const_field = float(const)

    def field(self, x: GraphState, u: int, w: int) -> float:
        work, cand = _scratch(x.n)
        return float(K.local_field(x.adj, x.full_mask, self.plans, self.coef, self.const_field, u, w, work, cand))


@lru_cache(maxsize=64)
def spec_plans(spec: ErgmSpec, n: int) -> SpecPlans:
    return SpecPlans(spec, n)


def _edge_uw(x: GraphState, e) -> tuple[int, int]:
    if isinstance(e, (tuple, list)):
        u, w = int(e[0]), int(e[1])
        if u == w or not (0 <= u < x.n and 0 <= w < x.n):
            raise DomainError(f"invalid edge {e}")
        return u, w
    return edge_pair(x.n, int(e))


def local_field(x: GraphState, spec: ErgmSpec, e) -> float:
    """``n^2 d_e H(x) = sum_j beta_j N_{G_j}(x, e) / n^(v_j - 2)``."""
    u, w = _edge_uw(x, e)
    return spec_plans(spec, x.n).field(x, u, w)


def local_fields(x: GraphState, spec: ErgmSpec, edge_ids=None) -> np.ndarray:
    """Local fields for many edges at once (all edge ids by default)."""
    sp = spec_plans(spec, x.n)
    eu, ew = edge_pairs(x.n)
    sel = np.arange(eu.shape[0]) if edge_ids is None else np.ascontiguousarray(edge_ids, dtype=np.int64)
    if sel.size and (sel.min() < 0 or sel.max() >= eu.shape[0]):
        raise DomainError("edge id out of range")
    junk = np.zeros(sel.shape[0], dtype=np.int64)
    out = np.zeros(sel.shape[0])
    if sp.plans.shape[0]:
        work, cand = _scratch(x.n)
        K.edge_deltas(x.adj, x.full_mask, eu, ew, sel, sp.plans, 0, sp.plans.shape[0], sp.coef, junk, out, work, cand)
    return out + sp.const_field


def edge_update_probability(x: GraphState, spec: ErgmSpec, e) -> float:
    """Probability that a resample of ``e`` sets it present."""
    return float(logistic(local_field(x, spec, e)))


@dataclass(frozen=True)
class StepRecord:
    edge: int
    field: float
    prob: float
    proposed: int
    changed: bool
    rejected: bool


def glauber_step(x: GraphState, spec: ErgmSpec, rng: np.random.Generator, well: Optional[Well] = None) -> StepRecord:
    """One resample of a uniformly chosen edge, applied to ``x`` in place."""
    N = n_pairs(x.n)
    k = int(rng.integers(0, N))
    u = float(rng.random())
    eu, ew = edge_pairs(x.n)
    a, b = int(eu[k]), int(ew[k])
    z = spec_plans(spec, x.n).field(x, a, b)
    prob = float(logistic(z))
    new = 1 if u < prob else 0
    old = int(x.has_edge(a, b))
    if new == old:
        return StepRecord(k, z, prob, new, False, False)
    if well is not None:
        lo, hi = well.bounds(x.n)
        ne = x.edge_count + (1 if new else -1)
        if ne < lo or ne > hi:
            return StepRecord(k, z, prob, new, False, True)
    x.flip_pair(a, b)
    return StepRecord(k, z, prob, new, True, False)


# ---------------------------------------------------------------------------
# chains


class _Stream:
    """Buffered (edge index, uniform) draws; chunking is fixed so output is seed-determined."""

    def __init__(self, rng: np.random.Generator, n_edges: int, chunk: int = RNG_CHUNK):
        self.rng = rng
        self.N = n_edges
        self.chunk = chunk
        self._idx = np.empty(0, dtype=np.int64)
        self._u = np.empty(0)
        self._pos = 0

    def _refill(self):
        self._idx = self.rng.integers(0, self.N, size=self.chunk, dtype=np.int64)
        self._u = self.rng.random(self.chunk)
        self._pos = 0

    def take(self, m: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        while m > 0:
            if self._pos >= self.chunk:
                self._refill()
            k = min(m, self.chunk - self._pos)
            yield self._idx[self._pos : self._pos + k], self._u[self._pos : self._pos + k]
            self._pos += k
            m -= k


class _Chain:
    """A live chain bound to compiled plans and an RNG stream."""

    def __init__(self, spec: ErgmSpec, x: GraphState, rng: np.random.Generator, well: Optional[Well]):
        self.x = x
        self.sp = spec_plans(spec, x.n)
        self.eu, self.ew = edge_pairs(x.n)
        self.stream = _Stream(rng, n_pairs(x.n))
        self.stream._pos = self.stream.chunk
        if well is None:
            self.lo, self.hi = 0, n_pairs(x.n)
        else:
            self.lo, self.hi = well.bounds(x.n)
            if not self.lo <= x.edge_count <= self.hi:
                raise DomainError(f"initial edge count {x.edge_count} outside the well band [{self.lo}, {self.hi}]")
        self.state = np.array([x.edge_count, 0, x.edge_count, x.edge_count], dtype=np.int64)
        self.work, self.cand = _scratch(x.n)
        self.steps = 0

    def advance(self, m: int) -> None:
        x, sp = self.x, self.sp
        for idx, unif in self.stream.take(m):
            K.glauber_block(x.adj, x.deg, self.state, self.eu, self.ew, idx, unif, sp.plans, sp.coef,
                            sp.const_field, x.full_mask, self.lo, self.hi, self.work, self.cand)
        x.edge_count = int(self.state[0])
        self.steps += m

    @property
    def rejections(self) -> int:
        return int(self.state[1])


def _initial_state(cfg: ChainConfig, rng: np.random.Generator, p_default: float) -> GraphState:
    x = cfg.init.make(cfg.n, rng, p_default)
    if cfg.well is not None and cfg.init.kind == "er":
        for _ in range(100):
            if cfg.well.contains(x):
                break
            x = cfg.init.make(cfg.n, rng, p_default)
    if cfg.well is not None and not cfg.well.contains(x):
        raise ConfigError(f"initial state (density {x.density():.4f}) lies outside the well band")
    return x


class Sampler:
    """Burned-in chain for a config; iterate to get the live state at each record."""

    def __init__(self, cfg: ChainConfig, force: bool = False, allow_local_well: bool = False):
        self.cfg = cfg
        self.report = check_regime(cfg.spec, cfg.well, force, allow_local_well)
        rng = make_rng(cfg.seed, cfg.chain_index)
        p0 = cfg.well.p_star if cfg.well is not None else self.report.p_star
        self.chain = _Chain(cfg.spec, _initial_state(cfg, rng, p0), rng, cfg.well)
        self.chain.advance(cfg.burn_in_steps)

    def __iter__(self) -> Iterator[GraphState]:
        for _ in range(self.cfg.samples):
            self.chain.advance(self.cfg.thinning_steps)
            yield self.chain.x


def iter_samples(cfg: ChainConfig, force: bool = False, allow_local_well: bool = False) -> Iterator[GraphState]:
    """Yield the live state after burn-in and every thinning interval (copy it to keep it)."""
    return iter(Sampler(cfg, force, allow_local_well))


@dataclass
class ChainRun:
    config: ChainConfig
    names: list[str]
    values: np.ndarray
    steps: int
    rejections: int
    min_edges: int
    max_edges: int
    final: GraphState
    wall_seconds: float

    SCHEMA = "ergmclt.chain/1"

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def to_csv(self, path) -> None:
        burn, thin = self.config.burn_in_steps, self.config.thinning_steps
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# schema: {self.SCHEMA}\n")
            fh.write(",".join(["sample", "step"] + self.names) + "\n")
            for i, row in enumerate(self.values):
                cells = [str(i), str(burn + (i + 1) * thin)] + [format_value(v) for v in row]
                fh.write(",".join(cells) + "\n")

    def manifest(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "steps": self.steps,
            "rejections": self.rejections,
            "min_edges": self.min_edges,
            "max_edges": self.max_edges,
            "observables": self.names,
            "wall_seconds": self.wall_seconds,
        }


def format_value(v) -> str:
    f = float(v)
    if f.is_integer() and abs(f) < 2 ** 53:
        return str(int(f))
    return repr(f)


def _edge_count_obs(x: GraphState) -> float:
    return float(x.edge_count)


def run_chain(cfg: ChainConfig, observables: Sequence = (), force: bool = False,
              allow_local_well: bool = False, callback: Optional[Callable] = None) -> ChainRun:
    """Burn in, then record ``cfg.samples`` states at the thinning interval.

    ``observables`` are objects with ``name`` and ``evaluate(x)``; the edge count is
    recorded when none are given.  ``callback(i, x)`` sees every recorded state.
    """
    t0 = time.perf_counter()
    obs = list(observables)
    for o in obs:
        if hasattr(o, "check"):
            o.check(cfg.n)
    names = [o.name for o in obs] if obs else ["edges"]
    evals = [o.evaluate for o in obs] if obs else [_edge_count_obs]
    values = np.empty((cfg.samples, len(names)))
    sampler = Sampler(cfg, force, allow_local_well)
    for i, x in enumerate(sampler):
        values[i] = [f(x) for f in evals]
        if callback is not None:
            callback(i, x)
    chain = sampler.chain
    return ChainRun(
        config=cfg,
        names=names,
        values=values,
        steps=chain.steps,
        rejections=chain.rejections,
        min_edges=int(chain.state[2]),
        max_edges=int(chain.state[3]),
        final=chain.x.copy(),
        wall_seconds=time.perf_counter() - t0,
    )


def run_chains(cfgs: Sequence[ChainConfig], observables: Sequence = (), workers: int = 1, force: bool = False,
               allow_local_well: bool = False) -> list[ChainRun]:
    """Run independent chains, in a process pool when ``workers > 1``."""
    workers = resolve_workers(workers)
    if workers <= 1 or len(cfgs) <= 1:
        return [run_chain(c, observables, force, allow_local_well) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(run_chain, c, observables, force, allow_local_well) for c in cfgs]
        return [f.result() for f in futs]


def resolve_workers(workers: Optional[int]) -> int:
    env = os.environ.get("ERGMCLT_WORKERS")
    if workers is None or workers <= 0:
        workers = int(env) if env else 1
    return max(1, int(workers))


# ---------------------------------------------------------------------------
# monotone coupling


@dataclass
class CouplingRun:
    times: np.ndarray
    d_hamming: np.ndarray
    d_local: np.ndarray
    inversions: np.ndarray
    d_local_mean: np.ndarray
    asymmetric_rejections: int
    lower: GraphState
    upper: GraphState
    vertex: int
    edge: int

    SCHEMA = "ergmclt.coupling/1"

    @property
    def order_ok(self) -> np.ndarray:
        return self.inversions == 0

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# schema: {self.SCHEMA}\n")
            fh.write("t,d_H,d_loc,d_loc_mean,order_ok\n")
            for t, a, b, c, ok in zip(self.times, self.d_hamming, self.d_local, self.d_local_mean, self.order_ok):
                fh.write(f"{t},{a},{b},{format_value(c)},{int(ok)}\n")


def run_coupled(spec: ErgmSpec, x: GraphState, e0, v: int, horizon: int, rng: np.random.Generator,
                well: Optional[Well] = None, record_every: int = 1) -> CouplingRun:
    """Evolve ``x`` and ``x`` with ``e0`` flipped under shared edge choices and uniforms.

    The chain without ``e0`` is the lower one.  Records are taken at ``t = 0`` and
    every ``record_every`` steps up to ``horizon``.
    """
    u0, w0 = _edge_uw(x, e0)
    if not 0 <= v < x.n or v in (u0, w0):
        raise DomainError(f"vertex {v} must be a vertex outside the flipped edge ({u0},{w0})")
    if horizon < 0 or record_every < 1:
        raise DomainError("horizon must be >= 0 and record_every >= 1")
    n = x.n
    a = x.copy()
    b = x.copy()
    if a.has_edge(u0, w0):
        a.flip_pair(u0, w0)
    else:
        b.flip_pair(u0, w0)
    if well is None:
        lo, hi = 0, n_pairs(n)
    else:
        lo, hi = well.bounds(n)
        if not (lo <= a.edge_count <= hi and lo <= b.edge_count <= hi):
            raise DomainError("both coupled starts must lie inside the well band")
    sp = spec_plans(spec, n)
    eu, ew = edge_pairs(n)
    nrec = horizon // record_every
    out = np.zeros((nrec + 1, 5), dtype=np.int64)
    out[0] = (1, 0, 0, 1, 1)
    state = np.array([a.edge_count, b.edge_count, 1, 0, 0, 0, 1, 1], dtype=np.int64)
    locs = np.array([v, u0, w0], dtype=np.int64)
    work, cand = _scratch(n)
    N = n_pairs(n)
    rec = 1
    # blocks are multiples of record_every so the kernel's record clock stays aligned
    block = max(1, RNG_CHUNK // record_every) * record_every
    done = 0
    steps = nrec * record_every
    while done < steps:
        m = min(block, steps - done)
        idx = rng.integers(0, N, size=m, dtype=np.int64)
        unif = rng.random(m)
        rec = K.coupled_block(a.adj, b.adj, state, eu, ew, idx, unif, locs, sp.plans, sp.coef, sp.const_field,
                              a.full_mask, lo, hi, record_every, out, rec, work, cand)
        done += m
    a.edge_count, b.edge_count = int(state[0]), int(state[1])
    # the coupled kernel does not maintain degree tables
    a.deg[:] = a.to_dense().sum(axis=1)
    b.deg[:] = b.to_dense().sum(axis=1)
    return CouplingRun(
        times=np.arange(nrec + 1, dtype=np.int64) * record_every,
        d_hamming=out[:, 0].copy(),
        d_local=out[:, 1].copy(),
        inversions=out[:, 2].copy(),
        d_local_mean=(2 * out[:, 0] - out[:, 3] - out[:, 4]) / (n - 2),
        asymmetric_rejections=int(state[5]),
        lower=a,
        upper=b,
        vertex=int(v),
        edge=edge_index(n, u0, w0),
    )


@dataclass
class CouplingSummary:
    n: int
    replicas: int
    times: np.ndarray
    mean_dh: np.ndarray
    se_dh: np.ndarray
    mean_dloc: np.ndarray
    se_dloc: np.ndarray
    decay_rate: float
    scaled_rate: float
    time_avg_dloc: float
    time_avg_dloc_se: float
    mean_dloc_avg: np.ndarray
    time_avg_dloc_avg: float
    time_avg_dloc_avg_se: float
    order_violations: int
    violations_without_rejection: int
    asymmetric_rejections: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "replicas": self.replicas,
            "decay_rate": self.decay_rate,
            "scaled_rate": self.scaled_rate,
            "time_avg_dloc": self.time_avg_dloc,
            "time_avg_dloc_se": self.time_avg_dloc_se,
            "time_avg_dloc_vertex_mean": self.time_avg_dloc_avg,
            "time_avg_dloc_vertex_mean_se": self.time_avg_dloc_avg_se,
            "order_violations": self.order_violations,
            "violations_without_rejection": self.violations_without_rejection,
            "asymmetric_rejections": self.asymmetric_rejections,
        }

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# schema: ergmclt.coupling-mean/1\n")
            fh.write("t,mean_d_H,se_d_H,mean_d_loc,se_d_loc,mean_d_loc_vertex_mean\n")
            for row in zip(self.times, self.mean_dh, self.se_dh, self.mean_dloc, self.se_dloc, self.mean_dloc_avg):
                fh.write(",".join(format_value(c) for c in row) + "\n")


def fit_decay_rate(times: np.ndarray, mean_dh: np.ndarray, floor: float = 0.05) -> float:
    """Per-step rate ``lambda`` from a least-squares fit of ``log E d_H(t) = a - lambda t``.

    Uses the initial window where the mean stays above ``floor``.
    """
    ok = mean_dh >= floor
    stop = int(np.argmin(ok)) if not ok.all() else len(ok)
    t = np.asarray(times[:stop], dtype=float)
    y = np.log(np.asarray(mean_dh[:stop], dtype=float))
    if len(t) < 3:
        raise DomainError("too few points above the floor to fit a decay rate")
    slope = np.polyfit(t, y, 1)[0]
    return float(-slope)


def _coupled_replica(spec, x, e0, v, horizon, seed, index, well, record_every):
    rng = make_rng(seed, index)
    return run_coupled(spec, x, e0, v, horizon, rng, well, record_every)


def coupling_experiment(cfg: ChainConfig, replicas: int, horizon: Optional[int] = None,
                        record_every: Optional[int] = None, workers: int = 1, force: bool = False,
                        allow_local_well: bool = False) -> CouplingSummary:
    """Average coupled runs of ``x`` vs ``x`` with one edge flipped.

    Starting states are snapshots one thinning interval apart from a single burned-in
    chain; each replica draws its own flipped edge ``e0`` and a vertex ``v`` outside it.
    Default horizon is six sweeps, recorded 32 times per sweep.
    """
    n = cfg.n
    N = n_pairs(n)
    horizon = 6 * N if horizon is None else int(horizon)
    record_every = max(1, N // 32) if record_every is None else int(record_every)
    snap_cfg = ChainConfig(cfg.spec, n, cfg.well, cfg.init, cfg.burn_in, cfg.thinning, replicas, cfg.seed, cfg.chain_index)
    starts = [x.copy() for x in iter_samples(snap_cfg, force, allow_local_well)]
    pick = make_rng(cfg.seed, 1_000_000 + cfg.chain_index)
    jobs = []
    for r, x in enumerate(starts):
        k = int(pick.integers(0, N))
        u0, w0 = edge_pair(n, k)
        v = int(pick.integers(0, n - 2))
        v = [z for z in range(n) if z not in (u0, w0)][v]
        jobs.append((cfg.spec, x, k, v, horizon, cfg.seed, 2_000_000 + r, cfg.well, record_every))
    workers = resolve_workers(workers)
    if workers > 1 and replicas > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(_coupled_replica, *zip(*jobs)))
    else:
        runs = [_coupled_replica(*j) for j in jobs]
    return summarize_coupling(n, runs)


def summarize_coupling(n: int, runs: Sequence[CouplingRun]) -> CouplingSummary:
    """Replica means of the distance series.

    Besides ``d_loc`` at each replica's designated vertex, the summary averages
    ``d_loc(v)`` over all ``v`` outside the flipped edge.  With the designated
    vertex uniform over those, both estimate the same expectation; the vertex
    mean has far smaller variance.
    """
    R = len(runs)
    times = runs[0].times
    DH = np.stack([r.d_hamming for r in runs]).astype(float)
    DL = np.stack([r.d_local for r in runs]).astype(float)
    mean_dh = DH.mean(axis=0)
    mean_dl = DL.mean(axis=0)
    sd = lambda a: a.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(a.shape[1])  # noqa: E731
    rate = fit_decay_rate(times, mean_dh)
    DA = np.stack([r.d_local_mean for r in runs]).astype(float)
    tail = slice(1, None) if DL.shape[1] > 1 else slice(0, 1)
    per_rep_avg = DL[:, tail].mean(axis=1)
    per_rep_vm = DA[:, tail].mean(axis=1)
    se = lambda a: float(a.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0  # noqa: E731
    viol = sum(int((r.inversions != 0).any()) for r in runs)
    viol_clean = sum(int((r.inversions != 0).any() and r.asymmetric_rejections == 0) for r in runs)
    return CouplingSummary(
        n=n,
        replicas=R,
        times=times,
        mean_dh=mean_dh,
        se_dh=sd(DH),
        mean_dloc=mean_dl,
        se_dloc=sd(DL),
        decay_rate=rate,
        scaled_rate=rate * n * n,
        time_avg_dloc=float(per_rep_avg.mean()),
        time_avg_dloc_se=se(per_rep_avg),
        mean_dloc_avg=DA.mean(axis=0),
        time_avg_dloc_avg=float(per_rep_vm.mean()),
        time_avg_dloc_avg_se=se(per_rep_vm),
        order_violations=viol,
        violations_without_rejection=viol_clean,
        asymmetric_rejections=int(sum(r.asymmetric_rejections for r in runs)),
    )


# ---------------------------------------------------------------------------
# good starting configurations


def _canonical(v: int, edges: tuple) -> tuple:
    best = None
    for perm in itertools.permutations(range(v)):
        key = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges))
        if best is None or key < best:
            best = key
    return best


@lru_cache(maxsize=8)
def connected_catalog(max_vertices: int) -> tuple[MotifGraph, ...]:
    """Connected graphs with 3..``max_vertices`` vertices (up to isomorphism), at most 5 vertices."""
    out = []
    for v in range(3, min(max_vertices, 5) + 1):
        pairs = [(a, b) for a in range(v) for b in range(a + 1, v)]
        seen = set()
        for mask in range(1, 1 << len(pairs)):
            edges = tuple(p for i, p in enumerate(pairs) if mask >> i & 1)
            if len(edges) < v - 1:
                continue
            g = MotifGraph(v, edges)
            if not g.is_connected:
                continue
            key = _canonical(v, edges)
            if key in seen:
                continue
            seen.add(key)
            out.append(MotifGraph(v, key))
    return tuple(out)


@dataclass
class GammaReport:
    member: bool
    epsilon: float
    p: float
    worst_deviation: float
    worst_graph: str
    violations: list[tuple[str, int, float]]
    graphs_checked: int
    edges_checked: int
    catalog_fallback: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def gamma_diagnostic(x: GraphState, spec: ErgmSpec, p: float, eps: float, edges: Optional[Sequence[int]] = None,
                     sample: int = 256, rng: Optional[np.random.Generator] = None, max_violations: int = 50) -> GammaReport:
    """Check ``|r_G(x, e) - p| < eps`` over motifs and the connected catalog.

    ``edges`` fixes the edges to scan; otherwise ``sample`` edges are drawn
    (all of them when ``sample`` is at least the number of pairs).
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    N = n_pairs(x.n)
    if edges is None:
        if sample >= N:
            edges = np.arange(N)
        else:
            rng = rng if rng is not None else make_rng(0)
            edges = np.sort(rng.choice(N, size=sample, replace=False))
    edges = np.asarray(edges, dtype=np.int64)
    maxv = spec.max_motif_vertices
    graphs = [m for m in spec.motifs if m.e >= 2]
    fallback = maxv > 5
    labels = {m.label for m in graphs}
    for g in connected_catalog(min(maxv, 5)):
        if g.e >= 2 and g.label not in labels:
            graphs.append(g)
            labels.add(g.label)
    worst, worst_g = 0.0, ""
    viol: list[tuple[str, int, float]] = []
    for g in graphs:
        counts = count_hom_delta_selected(x, g, edges)
        r = (counts / (2.0 * g.e * float(x.n) ** (g.v - 2))) ** (1.0 / (g.e - 1))
        dev = np.abs(r - p)
        j = int(np.argmax(dev))
        if dev[j] > worst:
            worst, worst_g = float(dev[j]), g.label
        for k in np.nonzero(dev >= eps)[0]:
            if len(viol) < max_violations:
                viol.append((g.label, int(edges[k]), float(r[k])))
    return GammaReport(
        member=worst < eps,
        epsilon=eps,
        p=p,
        worst_deviation=worst,
        worst_graph=worst_g,
        violations=viol,
        graphs_checked=len(graphs),
        edges_checked=len(edges),
        catalog_fallback=fallback,
    )


__all__ = [
    "ChainConfig",
    "ChainRun",
    "Sampler",
    "CouplingRun",
    "CouplingSummary",
    "GammaReport",
    "Init",
    "StepRecord",
    "Well",
    "check_regime",
    "connected_catalog",
    "coupling_experiment",
    "default_eta",
    "edge_update_probability",
    "gamma_diagnostic",
    "glauber_step",
    "iter_samples",
    "local_field",
    "make_rng",
    "r_statistic",
    "run_chain",
    "run_chains",
    "run_coupled",
    "spec_plans",
]
