"""Undirected unit-length multigraphs with stable edge identities."""

from __future__ import annotations

from collections import Counter, deque
from collections.abc import Iterable
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from ..errors import HopGameError


class GraphError(HopGameError):
    """Self-loops, out-of-range endpoints or unknown edge ids."""


class _Unreachable:
    """Distance between vertices in different components."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNREACHABLE"

    def __reduce__(self):
        return (_Unreachable, ())


UNREACHABLE = _Unreachable()


def edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


class MultiGraph:
    """Multigraph on vertices ``0..n-1``.

    Edge ``i`` is ``edges[i]``; ids are positions and stay fixed for the
    lifetime of the object.  Parallel edges are separate ids with the same
    endpoints.  Instances are treated as immutable: the ``with_*`` and
    ``without`` methods return new graphs.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise GraphError("vertex count must be nonnegative")
        self.n = int(n)
        es = []
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) outside [0, {n})")
            es.append(edge_key(u, v))
        self.edges: tuple[tuple[int, int], ...] = tuple(es)

    def __repr__(self) -> str:
        return f"MultiGraph(n={self.n}, m={self.m})"

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiGraph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """``adjacency[v]`` lists ``(neighbor, edge_id)`` for every incident copy."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for i, (u, v) in enumerate(self.edges):
            adj[u].append((v, i))
            adj[v].append((u, i))
        return adj

    @cached_property
    def bundles(self) -> dict[tuple[int, int], int]:
        """Multiplicity of each vertex pair that has at least one edge."""
        return dict(Counter(self.edges))

    @cached_property
    def neighbor_sets(self) -> list[tuple[int, ...]]:
        return [tuple(sorted({w for w, _ in row})) for row in self.adjacency]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.neighbor_sets[v]

    def degree(self, v: int) -> int:
        """Number of incident edge copies."""
        return len(self.adjacency[v])

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def max_degree(self) -> int:
        return int(self.degrees().max()) if self.n else 0

    def volume(self, vertices: Iterable[int]) -> int:
        deg = self.degrees()
        return int(sum(deg[v] for v in vertices))

    def cut_edges(self, side: Iterable[int]) -> list[int]:
        """Ids of edges with exactly one endpoint in ``side``."""
        s = set(side)
        return [i for i, (u, v) in enumerate(self.edges) if (u in s) != (v in s)]

    def with_edges(self, more: Iterable[tuple[int, int]]) -> MultiGraph:
        return MultiGraph(self.n, list(self.edges) + list(more))

    def without(self, edge_ids: Iterable[int]) -> MultiGraph:
        drop = set(edge_ids)
        bad = [i for i in drop if not (0 <= i < self.m)]
        if bad:
            raise GraphError(f"unknown edge ids {sorted(bad)[:5]}")
        return MultiGraph(self.n, [e for i, e in enumerate(self.edges) if i not in drop])

    # -- distances ---------------------------------------------------------

    def bfs(self, source: int, limit: int | None = None) -> np.ndarray:
        """Hop distances from ``source``; ``-1`` marks unreachable (or beyond ``limit``)."""
        dist = np.full(self.n, -1, dtype=np.int64)
        dist[source] = 0
        queue = deque([source])
        nbrs = self.neighbor_sets
        while queue:
            x = queue.popleft()
            d = dist[x]
            if limit is not None and d >= limit:
                continue
            for y in nbrs[x]:
                if dist[y] < 0:
                    dist[y] = d + 1
                    queue.append(y)
        return dist

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """All-pairs hop distances with ``-1`` for unreachable pairs."""
        if self.n == 0:
            return np.zeros((0, 0), dtype=np.int64)
        if not self.edges:
            d = np.full((self.n, self.n), -1, dtype=np.int64)
            np.fill_diagonal(d, 0)
            return d
        rows, cols = zip(*self.bundles)
        adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n, self.n))
        d = shortest_path(adj, directed=False, unweighted=True)
        out = np.where(np.isinf(d), -1, d).astype(np.int64)
        return out


def dist(G: MultiGraph, u: int, v: int):
    """Hop distance, or ``UNREACHABLE``."""
    d = int(G.bfs(u)[v])
    return UNREACHABLE if d < 0 else d


def ball(G: MultiGraph, v: int, r: int) -> frozenset[int]:
    if r < 0:
        raise GraphError("ball radius must be nonnegative")
    d = G.bfs(v, limit=r)
    return frozenset(int(x) for x in np.flatnonzero(d >= 0))


def diam(G: MultiGraph, vertices: Iterable[int]):
    """Weak diameter of ``vertices`` measured through all of ``G``."""
    U = sorted(set(vertices))
    if len(U) <= 1:
        return 0
    D = G.distance_matrix[np.ix_(U, U)]
    if (D < 0).any():
        return UNREACHABLE
    return int(D.max())
