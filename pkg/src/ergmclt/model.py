"""ERGM specification and the density-level (scalar) functions of the Hamiltonian.

A ferromagnetic ERGM is given by motif graphs ``G_0, ..., G_K`` (``G_0`` a single
edge) and parameters ``beta_0 in R``, ``beta_j >= 0`` for ``j >= 1``.  Evaluating the
Hamiltonian on the constant density ``q`` replaces each homomorphism density
``t(G_j, x)`` by ``q ** e_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DomainError

# Clamp used for entropy derivatives, which diverge at the boundary.
BOUNDARY_CLAMP = 1e-12


@dataclass(frozen=True)
class MotifGraph:
    """A small simple graph on vertices ``0..vertex_count-1``."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        v = int(self.vertex_count)
        if v < 2:
            raise DomainError(f"motif needs at least 2 vertices, got {v}")
        norm = []
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise DomainError(f"motif edge ({a},{b}) is a loop")
            if not (0 <= a < v and 0 <= b < v):
                raise DomainError(f"motif edge ({a},{b}) out of range for v={v}")
            norm.append((min(a, b), max(a, b)))
        if len(set(norm)) != len(norm):
            raise DomainError("motif has duplicate edges")
        if not norm:
            raise DomainError("motif needs at least one edge")
        object.__setattr__(self, "vertex_count", v)
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def v(self) -> int:
        return self.vertex_count

    @property
    def e(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> tuple[int, ...]:
        deg = [0] * self.vertex_count
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return tuple(deg)

    @property
    def is_forest(self) -> bool:
        parent = list(range(self.vertex_count))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            parent[ra] = rb
        return True

    @property
    def is_connected(self) -> bool:
        adj: dict[int, set[int]] = {i: set() for i in range(self.vertex_count)}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.vertex_count

    def degree_square_sum(self) -> int:
        """Sum over motif vertices of ``d_rho * (d_rho - 1)``."""
        return sum(d * (d - 1) for d in self.degrees)

    def without_edge(self, k: int) -> "MotifGraph":
        """The motif with its ``k``-th edge deleted (vertex set kept)."""
        rest = self.edges[:k] + self.edges[k + 1 :]
        return MotifGraph(self.vertex_count, rest, name=f"{self.label}-e{k}")

    @property
    def label(self) -> str:
        return self.name or "G[" + ";".join(f"{a}-{b}" for a, b in self.edges) + "]"

    def to_dict(self) -> dict:
        return {"name": self.label, "vertices": self.vertex_count, "edges": [list(e) for e in self.edges]}

    # -- catalog ---------------------------------------------------------
    @classmethod
    def edge(cls) -> "MotifGraph":
        return cls(2, ((0, 1),), name="edge")

    @classmethod
    def star(cls, k: int) -> "MotifGraph":
        """``k``-star: centre 0 joined to ``k`` leaves."""
        return cls(k + 1, tuple((0, i) for i in range(1, k + 1)), name=f"{k}-star")

    @classmethod
    def wedge(cls) -> "MotifGraph":
        """Path on three vertices with centre 1."""
        return cls(3, ((0, 1), (1, 2)), name="wedge")

    @classmethod
    def path(cls, k: int) -> "MotifGraph":
        """Path with ``k`` edges."""
        return cls(k + 1, tuple((i, i + 1) for i in range(k)), name=f"path{k}")

    @classmethod
    def cycle(cls, k: int) -> "MotifGraph":
        return cls(k, tuple((i, (i + 1) % k) for i in range(k)), name=f"cycle{k}")

    @classmethod
    def triangle(cls) -> "MotifGraph":
        return cls(3, ((0, 1), (1, 2), (0, 2)), name="triangle")

    @classmethod
    def clique(cls, k: int) -> "MotifGraph":
        return cls(k, tuple((i, j) for i in range(k) for j in range(i + 1, k)), name=f"K{k}")

    @classmethod
    def from_name(cls, name: str) -> "MotifGraph":
        """Parse catalog names: edge, wedge, triangle, k-star, pathK, cycleK, KK."""
        name = name.strip()
        if name == "edge":
            return cls.edge()
        if name in ("wedge", "2-star"):
            return cls.wedge()
        if name == "triangle":
            return cls.triangle()
        if name.endswith("-star"):
            return cls.star(int(name[:-5]))
        if name.startswith("path"):
            return cls.path(int(name[4:]))
        if name.startswith("cycle"):
            return cls.cycle(int(name[5:]))
        if name.startswith("K") and name[1:].isdigit():
            return cls.clique(int(name[1:]))
        raise DomainError(f"unknown motif name {name!r}")


@dataclass(frozen=True)
class ErgmSpec:
    """Motifs ``G_0..G_K`` with parameters ``beta_0..beta_K``."""

    motifs: tuple[MotifGraph, ...]
    beta: tuple[float, ...]

    def __post_init__(self) -> None:
        motifs = tuple(self.motifs)
        beta = tuple(float(b) for b in self.beta)
        if len(motifs) != len(beta):
            raise DomainError(f"{len(motifs)} motifs but {len(beta)} parameters")
        if not motifs or motifs[0].v != 2 or motifs[0].e != 1:
            raise DomainError("motifs[0] must be a single edge")
        for j, b in enumerate(beta[1:], start=1):
            if not b >= 0:
                raise DomainError(f"ferromagnetic model needs beta_{j} >= 0, got {b}")
        object.__setattr__(self, "motifs", motifs)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def build(cls, motifs: Sequence[MotifGraph | str], beta: Sequence[float]) -> "ErgmSpec":
        ms = [MotifGraph.from_name(m) if isinstance(m, str) else m for m in motifs]
        return cls(tuple(ms), tuple(beta))

    @classmethod
    def erdos_renyi(cls, beta0: float) -> "ErgmSpec":
        return cls((MotifGraph.edge(),), (beta0,))

    @property
    def K(self) -> int:
        return len(self.motifs) - 1

    @property
    def all_forests(self) -> bool:
        return all(m.is_forest for m in self.motifs)

    @property
    def max_motif_vertices(self) -> int:
        return max(m.v for m in self.motifs)

    def edge_counts(self) -> np.ndarray:
        return np.array([m.e for m in self.motifs], dtype=float)

    def to_dict(self) -> dict:
        return {"motifs": [m.to_dict() for m in self.motifs], "beta": list(self.beta)}


def _check_prob(q) -> np.ndarray:
    arr = np.asarray(q, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"probability argument outside [0,1]: {q!r}")
    return arr


def _out(arr: np.ndarray, q):
    return float(arr) if np.ndim(q) == 0 else arr


def entropy_I(q):
    """``I(q) = (q log q + (1-q) log(1-q)) / 2`` with ``0 log 0 = 0``."""
    arr = _check_prob(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(arr > 0, arr * np.log(np.where(arr > 0, arr, 1.0)), 0.0)
        b = np.where(arr < 1, (1 - arr) * np.log(np.where(arr < 1, 1 - arr, 1.0)), 0.0)
    return _out(0.5 * (a + b), q)


def hamiltonian_scalar(spec: ErgmSpec, q):
    """``H(q) = sum_j beta_j q**e_j``."""
    arr = _check_prob(q)
    out = np.zeros_like(arr)
    for m, b in zip(spec.motifs, spec.beta):
        out = out + b * arr ** m.e
    return _out(out, q)


def hamiltonian_scalar_deriv(spec: ErgmSpec, q, order: int = 1):
    """First or second derivative of ``H(q)`` in ``q`` (``0**0 = 1``)."""
    if order not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {order!r}")
    arr = _check_prob(q)
    out = np.zeros_like(arr)
    for m, b in zip(spec.motifs, spec.beta):
        e = m.e
        if order == 1:
            out = out + b * e * arr ** (e - 1)
        elif e >= 2:
            out = out + b * e * (e - 1) * arr ** (e - 2)
    return _out(out, q)


def l_beta(spec: ErgmSpec, q):
    """``L_beta(q) = H(q) - I(q)``."""
    arr = _check_prob(q)
    return _out(np.asarray(hamiltonian_scalar(spec, arr)) - np.asarray(entropy_I(arr)), q)


def l_beta_deriv(spec: ErgmSpec, q, order: int = 1):
    """``L_beta'(q) = H'(q) - log(q/(1-q))/2``; ``L_beta''(q) = H''(q) - 1/(2q(1-q))``.

    Evaluated at ``q`` clamped to ``[1e-12, 1 - 1e-12]``.
    """
    arr = _check_prob(q)
    qc = np.clip(arr, BOUNDARY_CLAMP, 1 - BOUNDARY_CLAMP)
    h = np.asarray(hamiltonian_scalar_deriv(spec, qc, order))
    if order == 1:
        out = h - 0.5 * np.log(qc / (1 - qc))
    else:
        out = h - 0.5 / (qc * (1 - qc))
    return _out(out, q)


def logistic(z):
    """Overflow-free ``1 / (1 + exp(-z))``."""
    z = np.asarray(z, dtype=float)
    ez = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + ez), ez / (1.0 + ez))
    return float(out) if out.ndim == 0 else out


def phi_beta(spec: ErgmSpec, q):
    """Mean-field update ``phi_beta(q) = logistic(2 H'(q))``."""
    arr = _check_prob(q)
    return _out(np.asarray(logistic(2.0 * np.asarray(hamiltonian_scalar_deriv(spec, arr, 1)))), q)


def phi_beta_deriv(spec: ErgmSpec, q):
    """``phi_beta'(q) = phi (1 - phi) * 2 H''(q)``."""
    arr = _check_prob(q)
    ph = np.asarray(phi_beta(spec, arr))
    return _out(ph * (1 - ph) * 2.0 * np.asarray(hamiltonian_scalar_deriv(spec, arr, 2)), q)


def hamiltonian_full(spec: ErgmSpec, x) -> float:
    """``H(x) = sum_j beta_j N_{G_j}(x) / n**v_j`` for a finite graph ``x``."""
    from .graphstate import count_hom

    n = x.n
    return float(sum(b * count_hom(x, m) / float(n) ** m.v for m, b in zip(spec.motifs, spec.beta)))
