import math
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spectral_coarsen import CoarseningMap, Graph

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SQ2, SQ3 = math.sqrt(2.0), math.sqrt(3.0)


@pytest.fixture
def toy_graph():
    """Unit triangle on {0,1,2} with pendant edges 2-3 and 1-4."""
    return Graph(5, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (2, 3, 1.0), (1, 4, 1.0)])


@pytest.fixture
def toy_map():
    return CoarseningMap.from_groups(5, [[0, 1, 2], [3], [4]])


@pytest.fixture
def p3():
    return Graph(3, [(0, 1, 1.0), (1, 2, 1.0)])


@pytest.fixture
def p3_map():
    return CoarseningMap.from_groups(3, [[0, 1], [2]])


def path_graph(n, weights=None):
    weights = weights or [1.0] * (n - 1)
    return Graph(n, [(i, i + 1, w) for i, w in enumerate(weights)])


def triangle(weights=(1.0, 1.0, 1.0)):
    return Graph(3, [(0, 1, weights[0]), (1, 2, weights[1]), (0, 2, weights[2])])


def star(weights=(1.0, 1.0, 1.0)):
    return Graph(4, [(0, 1, weights[0]), (0, 2, weights[1]), (0, 3, weights[2])])


def random_matching(g, rng):
    """Greedy matching over a random edge order."""
    used = set()
    out = []
    for e in rng.permutation(g.n_edges):
        i, j = int(g.src[e]), int(g.dst[e])
        if i not in used and j not in used and rng.random() < 0.7:
            used |= {i, j}
            out.append((i, j))
    return out


ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
