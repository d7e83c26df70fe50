"""Exact ERGM laws on tiny graphs by enumerating every edge subset.

Graph ``i`` has edge ``k`` (in the linear edge order) iff bit ``k`` of ``i`` is
set.  Homomorphism counts for all graphs come from one pass over the ``n^v``
vertex maps of a motif followed by a subset-sum transform: each map requires a
fixed set of graph edges, and ``N_G(x)`` counts the maps whose set lies inside ``x``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, logsumexp

from .exceptions import BudgetError, DomainError
from .graphstate import GraphState, edge_index, n_pairs
from .model import ErgmSpec, MotifGraph
from .observables import Degree, EdgeCount, HomCount, Observable

DEFAULT_MAX_N = 7
TRANSITION_MAX_N = 5
NORMALIZATION_TOL = 1e-12
DUMP_DTYPE = np.dtype([("index", "<u4"), ("logw", "<f8")])


def memory_estimate(n: int, motifs: int = 1) -> int:
    """Bytes held during enumeration: log-weights, edge counts and one count array per motif."""
    size = 1 << n_pairs(n)
    return size * (8 + 8 + 8 * motifs)


def _popcount(size: int) -> np.ndarray:
    return np.bitwise_count(np.arange(size, dtype=np.uint64)).astype(np.int64)


def _zeta(c: np.ndarray, bits: int) -> np.ndarray:
    """Subset sums: ``out[x] = sum_{m subset of x} c[m]``."""
    out = c.copy()
    for b in range(bits):
        view = out.reshape(-1, 2, 1 << b)
        view[:, 1, :] += view[:, 0, :]
    return out


def hom_counts_all(G: MotifGraph, n: int) -> np.ndarray:
    """``N_G(x)`` for every graph index on ``n`` vertices."""
    M = n_pairs(n)
    bit = np.zeros((n, n), dtype=np.int64)
    for u in range(n):
        for w in range(u + 1, n):
            bit[u, w] = bit[w, u] = 1 << edge_index(n, u, w)
    c = np.zeros(1 << M, dtype=np.int64)
    medges = G.edges
    for img in itertools.product(range(n), repeat=G.v):
        mask = 0
        for a, b in medges:
            if img[a] == img[b]:
                break
            mask |= int(bit[img[a], img[b]])
        else:
            c[mask] += 1
    return _zeta(c, M)


def vertex_edge_mask(n: int, v: int) -> int:
    return sum(1 << edge_index(n, v, w) for w in range(n) if w != v)


@dataclass
class ExactDistribution:
    """Log-weights ``n^2 H(x)`` of every graph, with an optional density-band mask."""

    spec: ErgmSpec
    n: int
    logw: np.ndarray
    edges: np.ndarray
    log_partition: float
    mask: Optional[np.ndarray] = None
    band: Optional[tuple[int, int]] = None

    @property
    def n_edges(self) -> int:
        return n_pairs(self.n)

    @property
    def size(self) -> int:
        return self.logw.shape[0]

    def probabilities(self) -> np.ndarray:
        pr = np.exp(self.logw - self.log_partition)
        if self.mask is not None:
            pr[~self.mask] = 0.0
        return pr

    def graph(self, index: int) -> GraphState:
        bits = (int(index) >> np.arange(self.n_edges)) & 1
        return GraphState.from_bits(self.n, bits)

    def index_of(self, x: GraphState) -> int:
        return int(sum(int(b) << k for k, b in enumerate(x.to_bits())))

    def log_prob(self, x: GraphState) -> float:
        i = self.index_of(x)
        if self.mask is not None and not self.mask[i]:
            return -math.inf
        return float(self.logw[i] - self.log_partition)

    def summary(self) -> dict:
        pr = self.probabilities()
        mean, var = exact_moments(self, EdgeCount())
        return {
            "schema": "ergmclt.oracle/1",
            "spec": self.spec.to_dict(),
            "n": self.n,
            "graphs": self.size,
            "band": None if self.band is None else list(self.band),
            "log_partition": self.log_partition,
            "normalization_error": abs(float(pr.sum()) - 1.0),
            "edge_mean": mean,
            "edge_var": var,
            "marginals": [exact_marginal(self, e) for e in range(self.n_edges)],
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def dump(self, path) -> None:
        """Binary records of ``(graph index, log-weight)`` for every graph in the support."""
        idx = np.arange(self.size) if self.mask is None else np.flatnonzero(self.mask)
        rec = np.empty(idx.shape[0], dtype=DUMP_DTYPE)
        rec["index"] = idx
        rec["logw"] = self.logw[idx]
        rec.tofile(path)


def load_dump(path) -> np.ndarray:
    return np.fromfile(path, dtype=DUMP_DTYPE)


def build_exact(spec: ErgmSpec, n: int, well=None, max_n: int = DEFAULT_MAX_N) -> ExactDistribution:
    """Enumerate all ``2^C(n,2)`` graphs and their Gibbs weights.

    ``well`` is a ``dynamics.Well`` (or ``(lo, hi)`` edge bounds); the law is then
    renormalized over the band only.  Memory needed is about ``memory_estimate(n, K+1)``
    bytes (roughly 100 MB at ``n = 7`` with three motifs).
    """
    if n < 2:
        raise DomainError("need at least two vertices")
    if n > max_n:
        raise BudgetError(
            f"n={n} exceeds the exact-enumeration cap {max_n} "
            f"(would need about {memory_estimate(n, len(spec.motifs)) / 2**20:.0f} MiB)"
        )
    M = n_pairs(n)
    edges = _popcount(1 << M)
    logw = np.zeros(1 << M)
    for m, b in zip(spec.motifs, spec.beta):
        if b == 0.0:
            continue
        if m.e == 1:
            counts = 2 * edges * n ** (m.v - 2)
        else:
            counts = hom_counts_all(m, n)
        logw += b * counts / float(n) ** (m.v - 2)
    mask = band = None
    if well is not None:
        lo, hi = well if isinstance(well, tuple) else well.bounds(n)
        band = (int(lo), int(hi))
        mask = (edges >= lo) & (edges <= hi)
        if not mask.any():
            raise DomainError(f"density band {band} contains no graph at n={n}")
        logz = float(logsumexp(logw[mask]))
    else:
        logz = float(logsumexp(logw))
    return ExactDistribution(spec, n, logw, edges, logz, mask, band)


def observable_values(dist: ExactDistribution, obs: Observable) -> np.ndarray:
    """Observable for every graph index; vectorized for edge, degree and subgraph counts."""
    n = dist.n
    if isinstance(obs, EdgeCount):
        return dist.edges.astype(float)
    if isinstance(obs, Degree):
        obs.check(n)
        vm = np.uint64(vertex_edge_mask(n, obs.v))
        return np.bitwise_count(np.arange(dist.size, dtype=np.uint64) & vm).astype(float)
    if isinstance(obs, HomCount):
        return hom_counts_all(obs.G, n).astype(float)
    return np.array([obs.evaluate(dist.graph(i)) for i in range(dist.size)])


def exact_moments(dist: ExactDistribution, obs: Observable) -> tuple[float, float]:
    """Exact mean and variance of an observable."""
    pr = dist.probabilities()
    vals = observable_values(dist, obs)
    mean = float(np.dot(pr, vals))
    var = float(np.dot(pr, (vals - mean) ** 2))
    return mean, var


def exact_marginal(dist: ExactDistribution, e: int) -> float:
    """``P[X(e) = 1]``."""
    if not 0 <= e < dist.n_edges:
        raise DomainError(f"edge id {e} out of range")
    pr = dist.probabilities()
    present = ((np.arange(dist.size) >> e) & 1).astype(bool)
    return float(pr[present].sum())


def exact_law(dist: ExactDistribution, obs: Observable) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of an integer-valued observable."""
    vals = observable_values(dist, obs)
    pr = dist.probabilities()
    keys, inv = np.unique(vals, return_inverse=True)
    return keys, np.bincount(inv, weights=pr, minlength=keys.shape[0])


def total_variation(dist: ExactDistribution, counts: np.ndarray) -> float:
    """TV distance between the exact law and an empirical histogram over graph indices."""
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (dist.size,):
        raise DomainError("histogram must have one bin per graph index")
    emp = counts / counts.sum()
    return 0.5 * float(np.abs(emp - dist.probabilities()).sum())


@dataclass
class TransitionCheck:
    max_violation: float
    pairs: int
    boundary_rejections: int

    def to_dict(self) -> dict:
        return {"max_violation": self.max_violation, "pairs": self.pairs,
                "boundary_rejections": self.boundary_rejections}


def exact_transition_check(dist: ExactDistribution, spec: Optional[ErgmSpec] = None,
                           max_n: int = TRANSITION_MAX_N) -> TransitionCheck:
    """Largest ``|pi(x) P(x, x') - pi(x') P(x', x)|`` over adjacent graphs.

    ``P`` is built from the sampler's own update probabilities.  With a band mask,
    moves that would leave the band are rejected, so they carry no flow.
    """
    from .dynamics import edge_update_probability

    spec = dist.spec if spec is None else spec
    if dist.n > max_n:
        raise BudgetError(f"transition check limited to n <= {max_n}, got n={dist.n}")
    M = dist.n_edges
    pr = dist.probabilities()
    # prob[i, e]: chance that a resample of e in graph i makes it present
    prob = np.empty((dist.size, M))
    for i in range(dist.size):
        x = dist.graph(i)
        for e in range(M):
            prob[i, e] = edge_update_probability(x, spec, e)
    worst = 0.0
    pairs = rejections = 0
    for i in range(dist.size):
        for e in range(M):
            if (i >> e) & 1:
                continue
            j = i | (1 << e)
            if dist.mask is not None and not (dist.mask[i] and dist.mask[j]):
                if dist.mask[i] or dist.mask[j]:
                    rejections += 1
                continue
            fwd = pr[i] * prob[i, e] / M
            bwd = pr[j] * (1.0 - prob[j, e]) / M
            worst = max(worst, abs(fwd - bwd))
            pairs += 1
    return TransitionCheck(float(worst), pairs, rejections)


def product_law_tv(dist: ExactDistribution, q: float) -> float:
    """TV distance to the product of ``Bernoulli(q)`` edges."""
    M = dist.n_edges
    logp = dist.edges * math.log(q) + (M - dist.edges) * math.log1p(-q)
    return 0.5 * float(np.abs(np.exp(logp) - dist.probabilities()).sum())


def erdos_renyi_q(beta0: float) -> float:
    """Edge probability of the edge-only model."""
    return float(expit(2.0 * beta0))
