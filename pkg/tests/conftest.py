from __future__ import annotations

import itertools
import sys
from pathlib import Path

import pytest

from hopgame.graph import MultiGraph

sys.path.insert(0, str(Path(__file__).parent))


def complete(n: int, offset: int = 0) -> list[tuple[int, int]]:
    return [(offset + a, offset + b) for a, b in itertools.combinations(range(n), 2)]


def barbell(size: int = 5) -> MultiGraph:
    """Two cliques of ``size`` joined by the edge ``(size - 1, size)``."""
    return MultiGraph(2 * size, complete(size) + complete(size, size) + [(size - 1, size)])


def hypercube(d: int) -> MultiGraph:
    return MultiGraph(2 ** d, [(v, v ^ (1 << i)) for v in range(2 ** d) for i in range(d) if v < v ^ (1 << i)])


def path(n: int) -> MultiGraph:
    return MultiGraph(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> MultiGraph:
    return MultiGraph(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> MultiGraph:
    return MultiGraph(n, complete(n))


@pytest.fixture
def bar5() -> MultiGraph:
    return barbell(5)
