import itertools

import numpy as np
import pytest

from ergmclt.model import ErgmSpec, MotifGraph

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, title: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:>2} {title}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)


def small_motifs(max_v: int = 4) -> list[MotifGraph]:
    """Every graph with at least one edge on at most ``max_v`` vertices, up to isomorphism."""
    seen = set()
    out = []
    for v in range(2, max_v + 1):
        pairs = list(itertools.combinations(range(v), 2))
        for r in range(1, len(pairs) + 1):
            for edges in itertools.combinations(pairs, r):
                key = min(
                    tuple(sorted(tuple(sorted((p[a], p[b]))) for a, b in edges))
                    for p in itertools.permutations(range(v))
                )
                if (v, key) in seen:
                    continue
                seen.add((v, key))
                out.append(MotifGraph(v, edges))
    return out


@pytest.fixture(scope="session")
def edge_triangle():
    return ErgmSpec.build(["edge", "triangle"], [0.2, 0.1])


@pytest.fixture(scope="session")
def ewt_sub():
    """Subcritical edge-wedge-triangle spec used by the simulation checks."""
    return ErgmSpec.build(["edge", "wedge", "triangle"], [-0.6, 0.2, 0.2])


@pytest.fixture(scope="session")
def two_well():
    return ErgmSpec.build(["edge", "wedge", "triangle"], [-1.0, 0.53, 0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
