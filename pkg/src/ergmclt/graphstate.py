"""Mutable simple-graph state and homomorphism counting.

Adjacency is stored as ``n`` rows of ``ceil(n/64)`` 64-bit words.  Counting runs
through the plan-driven backtracking kernel in :mod:`ergmclt._kernels`; the
``*_naive`` functions enumerate all ``n**v`` vertex maps and serve as oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from . import _kernels as K
from .exceptions import DomainError
from .model import MotifGraph

# ---------------------------------------------------------------------------
# edge indexing


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(n: int, u: int, w: int) -> int:
    """Row-major linear index of the unordered pair ``{u, w}``."""
    if u == w or not (0 <= u < n and 0 <= w < n):
        raise DomainError(f"invalid edge ({u},{w}) for n={n}")
    if u > w:
        u, w = w, u
    return u * n - u * (u + 1) // 2 + (w - u - 1)


@lru_cache(maxsize=64)
def edge_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(eu, ew)`` with ``eu[k] < ew[k]`` for every linear index ``k``."""
    iu, iw = np.triu_indices(n, k=1)
    eu = np.ascontiguousarray(iu, dtype=np.int64)
    ew = np.ascontiguousarray(iw, dtype=np.int64)
    eu.flags.writeable = False
    ew.flags.writeable = False
    return eu, ew


def edge_pair(n: int, k: int) -> tuple[int, int]:
    if not 0 <= k < n_pairs(n):
        raise DomainError(f"edge id {k} out of range for n={n}")
    eu, ew = edge_pairs(n)
    return int(eu[k]), int(ew[k])


# ---------------------------------------------------------------------------
# graph state


class GraphState:
    """Simple graph on ``n`` vertices with bitset rows, degree table and edge count."""

    __slots__ = ("n", "adj", "deg", "edge_count", "full_mask")

    def __init__(self, n: int):
        if n < 2:
            raise DomainError(f"need n >= 2, got {n}")
        self.n = int(n)
        words = (n + 63) // 64
        self.adj = np.zeros((n, words), dtype=np.uint64)
        self.deg = np.zeros(n, dtype=np.int64)
        self.edge_count = 0
        mask = np.zeros(words, dtype=np.uint64)
        for v in range(n):
            mask[v >> 6] |= np.uint64(1) << np.uint64(v & 63)
        self.full_mask = mask

    # -- constructors --------------------------------------------------------
    @classmethod
    def empty(cls, n: int) -> "GraphState":
        return cls(n)

    @classmethod
    def complete(cls, n: int) -> "GraphState":
        return cls.from_dense(np.ones((n, n), dtype=np.int8) - np.eye(n, dtype=np.int8))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "GraphState":
        x = cls(n)
        for u, w in edges:
            if not x.has_edge(u, w):
                x.flip_pair(u, w)
        return x

    @classmethod
    def from_dense(cls, mat) -> "GraphState":
        mat = np.asarray(mat)
        n = mat.shape[0]
        if mat.shape != (n, n) or np.any(mat != mat.T) or np.any(np.diag(mat) != 0):
            raise DomainError("dense adjacency must be symmetric with empty diagonal")
        iu, iw = np.nonzero(np.triu(mat, 1))
        return cls.from_edges(n, zip(iu.tolist(), iw.tolist()))

    @classmethod
    def from_bits(cls, n: int, bits: np.ndarray) -> "GraphState":
        """Graph whose edge ``k`` is present iff ``bits[k]``."""
        eu, ew = edge_pairs(n)
        bits = np.asarray(bits).astype(bool)
        return cls.from_edges(n, zip(eu[bits].tolist(), ew[bits].tolist()))

    @classmethod
    def erdos_renyi(cls, n: int, p: float, rng: np.random.Generator) -> "GraphState":
        return cls.from_bits(n, rng.random(n_pairs(n)) < p)

    def copy(self) -> "GraphState":
        y = GraphState.__new__(GraphState)
        y.n = self.n
        y.adj = self.adj.copy()
        y.deg = self.deg.copy()
        y.edge_count = self.edge_count
        y.full_mask = self.full_mask
        return y

    # -- queries ---------------------------------------------------------------
    def has_edge(self, u: int, w: int) -> bool:
        return bool((int(self.adj[u, w >> 6]) >> (w & 63)) & 1)

    def __getitem__(self, k: int) -> int:
        """Edge indicator ``x(e)`` by linear edge id."""
        u, w = edge_pair(self.n, k)
        return int(self.has_edge(u, w))

    def degree(self, v: int) -> int:
        return int(self.deg[v])

    def neighbors(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.to_dense()[v])

    def to_dense(self) -> np.ndarray:
        bits = np.unpackbits(self.adj.view(np.uint8), axis=1, bitorder="little")
        return bits[:, : self.n].astype(np.int8)

    def to_bits(self) -> np.ndarray:
        eu, ew = edge_pairs(self.n)
        return self.to_dense()[eu, ew].astype(np.int8)

    def edges(self) -> list[tuple[int, int]]:
        eu, ew = edge_pairs(self.n)
        b = self.to_bits().astype(bool)
        return list(zip(eu[b].tolist(), ew[b].tolist()))

    @property
    def density(self) -> float:
        return self.edge_count / n_pairs(self.n)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GraphState)
            and self.n == other.n
            and np.array_equal(self.adj, other.adj)
            and self.edge_count == other.edge_count
            and np.array_equal(self.deg, other.deg)
        )

    def __repr__(self) -> str:
        return f"GraphState(n={self.n}, edges={self.edge_count})"

    # -- mutation ----------------------------------------------------------------
    def flip_pair(self, u: int, w: int) -> "GraphState":
        if u == w or not (0 <= u < self.n and 0 <= w < self.n):
            raise DomainError(f"invalid edge ({u},{w}) for n={self.n}")
        if self.has_edge(u, w):
            K.clear_edge(self.adj, u, w)
            self.deg[u] -= 1
            self.deg[w] -= 1
            self.edge_count -= 1
        else:
            K.set_edge(self.adj, u, w)
            self.deg[u] += 1
            self.deg[w] += 1
            self.edge_count += 1
        return self

    def permuted(self, perm) -> "GraphState":
        """Relabelled copy with vertex ``v`` sent to ``perm[v]``."""
        perm = np.asarray(perm)
        d = self.to_dense()
        out = np.zeros_like(d)
        out[np.ix_(perm, perm)] = d
        return GraphState.from_dense(out)

    def check(self) -> None:
        """Assert all structural invariants (test/debug use)."""
        d = self.to_dense()
        assert np.array_equal(d, d.T), "adjacency not symmetric"
        assert not np.any(np.diag(d)), "loop present"
        assert np.array_equal(d.sum(axis=1), self.deg), "degree table stale"
        assert 2 * self.edge_count == int(self.deg.sum()), "edge count stale"
        assert np.all(self.deg <= self.n - 1)

    # -- serialization -------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"n={self.n}"] + [f"{u} {w}" for u, w in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GraphState":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("n="):
            raise DomainError("edge-list text must start with a 'n=<n>' header")
        n = int(lines[0][2:])
        edges = [tuple(int(t) for t in ln.split()) for ln in lines[1:]]
        return cls.from_edges(n, edges)


def flip(x: GraphState, e: int) -> GraphState:
    """Toggle edge ``e`` (linear id) in place."""
    u, w = edge_pair(x.n, e)
    return x.flip_pair(u, w)


# ---------------------------------------------------------------------------
# counting plans


def _placement_order(motif: MotifGraph, fixed: list[int]) -> list[int]:
    adj = {i: set() for i in range(motif.v)}
    for a, b in motif.edges:
        adj[a].add(b)
        adj[b].add(a)
    order = list(fixed)
    rest = [i for i in range(motif.v) if i not in fixed]
    while rest:
        placed = set(order)
        best = max(rest, key=lambda i: (len(adj[i] & placed), len(adj[i]), -i))
        order.append(best)
        rest.remove(best)
    return order


def _one_plan(motif: MotifGraph, fixed: dict[int, int], forbidden_edges: set[int], vforb: set[int]) -> np.ndarray:
    """Packed plan row (see the ``P_*`` layout in the kernel module)."""
    if motif.v > K.MAXV:
        raise DomainError(f"motifs are limited to {K.MAXV} vertices")
    order = _placement_order(motif, list(fixed))
    level_of = {m: i for i, m in enumerate(order)}
    row = np.zeros(K.STRIDE, dtype=np.int64)
    row[K.P_NV] = motif.v
    row[K.P_FIX : K.P_FIX + K.MAXV] = -1
    for m, code in fixed.items():
        row[K.P_FIX + level_of[m]] = code
    for idx, (a, b) in enumerate(motif.edges):
        la, lb = level_of[a], level_of[b]
        hi, lo = max(la, lb), min(la, lb)
        row[K.P_NBR + hi * K.MAXV + row[K.P_NNBR + hi]] = lo
        row[K.P_NNBR + hi] += 1
        if idx in forbidden_edges:
            row[K.P_FORB + hi * K.MAXV + row[K.P_NFORB + hi]] = lo
            row[K.P_NFORB + hi] += 1
    for m in vforb:
        row[K.P_VFORB + level_of[m]] = 1
    return row


def stack_plans(plans: list, weight_index: int | list[int] = 0) -> np.ndarray:
    """Stack packed rows into a contiguous table, tagging each with a weight slot."""
    table = np.zeros((len(plans), K.STRIDE), dtype=np.int64)
    for i, row in enumerate(plans):
        table[i] = row
        table[i, K.P_WEIGHT] = weight_index if isinstance(weight_index, int) else weight_index[i]
    return table


_UNIT = np.ones(1)


FULL, SLOT_U, SLOT_W, SLOT_V = -1, 0, 1, 2


def delta_plans(motif: MotifGraph) -> list:
    """One plan per (first motif edge landing on ``e``, orientation)."""
    plans = []
    for k, (a, b) in enumerate(motif.edges):
        earlier = set(range(k))
        plans.append(_one_plan(motif, {a: SLOT_U, b: SLOT_W}, earlier, set()))
        plans.append(_one_plan(motif, {a: SLOT_W, b: SLOT_U}, earlier, set()))
    return plans


class MotifPlans:
    """All counting plans for one motif."""

    def __init__(self, motif: MotifGraph):
        self.motif = motif
        v = motif.v
        plans = [_one_plan(motif, {}, set(), set())]
        self.rooted0 = len(plans)
        plans += [_one_plan(motif, {r: SLOT_V}, set(), set()) for r in range(v)]
        self.vertex0 = len(plans)
        plans += [_one_plan(motif, {r: SLOT_V}, set(), set(range(r))) for r in range(v)]
        self.delta0 = len(plans)
        plans += delta_plans(motif)
        self.delta1 = len(plans)
        self.table = stack_plans(plans)


@lru_cache(maxsize=256)
def motif_plans(motif: MotifGraph) -> MotifPlans:
    return MotifPlans(motif)


def _scratch(n: int):
    words = (n + 63) // 64
    return np.zeros(K.WORK_SIZE, dtype=np.int64), np.zeros((K.MAXV, words), dtype=np.uint64)


def _run(x: GraphState, mp: MotifPlans, p0: int, p1: int, fu: int, fw: int, fv: int) -> int:
    work, cand = _scratch(x.n)
    total, _ = K.count_plans(x.adj, x.full_mask, mp.table, p0, p1, _UNIT, fu, fw, fv, work, cand)
    return int(total)


# ---------------------------------------------------------------------------
# public counting API


def count_hom(x: GraphState, G: MotifGraph) -> int:
    """Number of (not necessarily injective) homomorphisms of ``G`` into ``x``."""
    return _run(x, motif_plans(G), 0, 1, -1, -1, -1)


def _resolve_edge(x: GraphState, e) -> tuple[int, int]:
    if isinstance(e, (tuple, list)):
        u, w = int(e[0]), int(e[1])
        edge_index(x.n, u, w)
        return u, w
    return edge_pair(x.n, int(e))


def count_hom_delta(x: GraphState, G: MotifGraph, e) -> int:
    """``N_G(x, e)``: homomorphisms of ``G`` into ``x^{+e}`` that use ``e``.

    ``e`` is a linear edge id or a vertex pair.
    """
    u, w = _resolve_edge(x, e)
    mp = motif_plans(G)
    work, cand = _scratch(x.n)
    total, _ = K.delta_count(x.adj, x.full_mask, mp.table, mp.delta0, mp.delta1, _UNIT, u, w, work, cand)
    return int(total)


def count_hom_delta_all(x: GraphState, G: MotifGraph) -> np.ndarray:
    """``N_G(x, e)`` for every edge id, as an int64 array."""
    return count_hom_delta_selected(x, G, np.arange(n_pairs(x.n)))


def count_hom_delta_selected(x: GraphState, G: MotifGraph, edge_ids) -> np.ndarray:
    """``N_G(x, e)`` for the given edge ids."""
    mp = motif_plans(G)
    eu, ew = edge_pairs(x.n)
    sel = np.ascontiguousarray(edge_ids, dtype=np.int64)
    if sel.size and (sel.min() < 0 or sel.max() >= eu.shape[0]):
        raise DomainError("edge id out of range")
    out = np.zeros(sel.shape[0], dtype=np.int64)
    junk = np.zeros(sel.shape[0])
    work, cand = _scratch(x.n)
    K.edge_deltas(x.adj, x.full_mask, eu, ew, sel, mp.table, mp.delta0, mp.delta1, _UNIT, out, junk, work, cand)
    return out


def count_hom_rooted(x: GraphState, G: MotifGraph, rho: int, v: int) -> int:
    """``N_G^{rho -> v}(x)``: homomorphisms sending motif vertex ``rho`` to ``v``."""
    if not 0 <= rho < G.v:
        raise IndexError(f"motif vertex {rho} out of range")
    if not 0 <= v < x.n:
        raise IndexError(f"graph vertex {v} out of range")
    mp = motif_plans(G)
    return _run(x, mp, mp.rooted0 + rho, mp.rooted0 + rho + 1, -1, -1, v)


def count_hom_at_vertex(x: GraphState, G: MotifGraph, v: int) -> int:
    """``N_G^v(x)``: homomorphisms whose image contains ``v``."""
    if not 0 <= v < x.n:
        raise IndexError(f"graph vertex {v} out of range")
    mp = motif_plans(G)
    return _run(x, mp, mp.vertex0, mp.vertex0 + G.v, -1, -1, v)


@dataclass(frozen=True)
class RStatistic:
    value: float
    degenerate: bool


def r_statistic(x: GraphState, G: MotifGraph, e) -> RStatistic:
    """``r_G(x, e) = (N_G(x, e) / (2 e n^(v-2)))^(1/(e-1))``.

    Single-edge motifs have no exponent; they return 1 flagged degenerate.
    """
    if G.e < 2:
        return RStatistic(1.0, True)
    ratio = count_hom_delta(x, G, e) / (2.0 * G.e * float(x.n) ** (G.v - 2))
    return RStatistic(ratio ** (1.0 / (G.e - 1)), False)


# ---------------------------------------------------------------------------
# brute-force oracles


def _medges(G: MotifGraph) -> np.ndarray:
    return np.array(G.edges, dtype=np.int64).reshape(-1, 2)


def _dense(x) -> np.ndarray:
    d = x.to_dense() if isinstance(x, GraphState) else np.asarray(x)
    return np.ascontiguousarray(d, dtype=np.int8)


def count_hom_naive(x, G: MotifGraph) -> int:
    return int(K.hom_count_naive(_dense(x), _medges(G), G.v, -1, -1, -1))


def count_hom_rooted_naive(x, G: MotifGraph, rho: int, v: int) -> int:
    return int(K.hom_count_naive(_dense(x), _medges(G), G.v, rho, v, -1))


def count_hom_at_vertex_naive(x, G: MotifGraph, v: int) -> int:
    return int(K.hom_count_naive(_dense(x), _medges(G), G.v, -1, -1, v))


def count_hom_delta_naive(x, G: MotifGraph, u: int, w: int) -> int:
    """``N_G(x^{+e}) - N_G(x^{-e})`` by two brute-force counts."""
    d = _dense(x).copy()
    d[u, w] = d[w, u] = 1
    plus = K.hom_count_naive(d, _medges(G), G.v, -1, -1, -1)
    d[u, w] = d[w, u] = 0
    minus = K.hom_count_naive(d, _medges(G), G.v, -1, -1, -1)
    return int(plus - minus)
