"""Well-separated clusterings and their decomposition into equal-size blocks.

A clustering is a family of disjoint clusters with small weak diameter that
sit far apart from one another.  A well-separated clustering is several such
clusterings that jointly cover the vertex set.  ``decompose`` turns one into
groups of ``k`` equal-size blocks that can be matched pairwise.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import HopGameError
from .graph.multigraph import MultiGraph

FLOAT_DENOMINATOR = 10**12


class CoverInfeasible(HopGameError):
    """Ball carving needed more than the permitted load."""


class PreconditionViolated(HopGameError):
    """Inputs to ``decompose`` violate one of its required inequalities."""


def as_fraction(x) -> Fraction:
    """Exact value of an int, Fraction or the nearest simple fraction to a float."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(x).limit_denominator(FLOAT_DENOMINATOR)


def _sorted_sets(sets: Iterable[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(sorted(set(int(v) for v in s))) for s in sets)


def _set_distance(D: np.ndarray, a: Sequence[int], b: Sequence[int]) -> int:
    """Minimum hop distance between two vertex sets; ``-1`` if disconnected."""
    block = D[np.ix_(list(a), list(b))]
    reach = block[block >= 0]
    return int(reach.min()) if reach.size else -1


@dataclass(frozen=True)
class Clustering:
    clusters: tuple[tuple[int, ...], ...]
    diameter_bound: int
    separation_bound: int

    def __init__(self, clusters: Iterable[Iterable[int]], diameter_bound: int, separation_bound: int):
        object.__setattr__(self, "clusters", _sorted_sets(clusters))
        object.__setattr__(self, "diameter_bound", int(diameter_bound))
        object.__setattr__(self, "separation_bound", int(separation_bound))

    @property
    def size(self) -> int:
        return sum(len(c) for c in self.clusters)

    def vertices(self) -> set[int]:
        return {v for c in self.clusters for v in c}

    def validate(self, G: MultiGraph) -> list[str]:
        problems = []
        seen: set[int] = set()
        for i, c in enumerate(self.clusters):
            if not c:
                problems.append(f"cluster {i} is empty")
            if seen & set(c):
                problems.append(f"cluster {i} overlaps an earlier cluster")
            seen |= set(c)
        D = G.distance_matrix
        for i, c in enumerate(self.clusters):
            sub = D[np.ix_(c, c)]
            if (sub < 0).any() or (sub.size and sub.max() > self.diameter_bound):
                problems.append(f"cluster {i} has weak diameter above {self.diameter_bound}")
        for i in range(len(self.clusters)):
            for j in range(i + 1, len(self.clusters)):
                d = _set_distance(D, self.clusters[i], self.clusters[j])
                if 0 <= d < self.separation_bound:
                    problems.append(f"clusters {i} and {j} are {d} < {self.separation_bound} apart")
        return problems


def vertex_load(sets: Iterable[Iterable[int]]) -> Counter:
    return Counter(v for s in sets for v in s)


@dataclass(frozen=True)
class WellSeparatedClustering:
    n: int
    clusterings: tuple[Clustering, ...]

    def __init__(self, n: int, clusterings: Iterable[Clustering]):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "clusterings", tuple(clusterings))

    @property
    def width(self) -> int:
        return len(self.clusterings)

    @property
    def load(self) -> int:
        counts = vertex_load(c for cl in self.clusterings for c in cl.clusters)
        return max(counts.values(), default=0)

    def all_clusters(self) -> list[tuple[int, int, tuple[int, ...]]]:
        return [(j, i, c) for j, cl in enumerate(self.clusterings) for i, c in enumerate(cl.clusters)]

    def validate(self, G: MultiGraph) -> list[str]:
        problems = []
        covered = set().union(*(cl.vertices() for cl in self.clusterings)) if self.clusterings else set()
        missing = set(range(self.n)) - covered
        if missing:
            problems.append(f"{len(missing)} vertices are in no cluster, e.g. {sorted(missing)[:5]}")
        for j, cl in enumerate(self.clusterings):
            problems.extend(f"clustering {j}: {p}" for p in cl.validate(G))
        return problems

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "width": self.width,
            "load": self.load,
            "clusterings": [
                {"diameter_bound": cl.diameter_bound, "separation_bound": cl.separation_bound,
                 "clusters": [list(c) for c in cl.clusters]}
                for cl in self.clusterings
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> WellSeparatedClustering:
        return cls(data["n"], [Clustering(cl["clusters"], cl["diameter_bound"], cl["separation_bound"])
                               for cl in data["clusterings"]])


def build_cover(G: MultiGraph, h_sep: int, h_diam: int, load_max: int) -> WellSeparatedClustering:
    """Cover every vertex by greedy ball carving.

    Each clustering is built by repeatedly taking the lowest-index vertex
    that is still uncovered and still eligible, carving the eligible part of
    its ball of radius ``r = h_diam // 2`` as a cluster, and making the ball
    of radius ``r + h_sep - 1`` ineligible.  A new clustering starts once no
    eligible uncovered vertex is left.

    Clusters sit inside radius-``r`` balls, so their weak diameter is at most
    ``h_diam``.  Any vertex carved later is at least ``r + h_sep`` from the
    earlier centre, hence at least ``h_sep`` from the earlier cluster.
    """
    if not (h_diam >= h_sep >= 1):
        raise ValueError(f"need h_diam >= h_sep >= 1, got h_sep={h_sep}, h_diam={h_diam}")
    inner = h_diam // 2
    outer = inner + h_sep - 1
    uncovered = np.ones(G.n, dtype=bool)
    load = np.zeros(G.n, dtype=np.int64)
    clusterings = []
    while uncovered.any():
        eligible = np.ones(G.n, dtype=bool)
        clusters = []
        while True:
            cand = np.flatnonzero(uncovered & eligible)
            if cand.size == 0:
                break
            v = int(cand[0])
            d = G.bfs(v, limit=outer)
            members = np.flatnonzero((d >= 0) & (d <= inner) & eligible)
            clusters.append(members.tolist())
            uncovered[members] = False
            load[members] += 1
            eligible[d >= 0] = False
        clusterings.append(Clustering(clusters, h_diam, h_sep))
        if load.max() > load_max:
            raise CoverInfeasible(
                f"load reached {int(load.max())} > {load_max} after {len(clusterings)} clusterings")
    return WellSeparatedClustering(G.n, clusterings)


def largest_cluster(N: WellSeparatedClustering) -> tuple[tuple[int, ...], int]:
    """A largest cluster; ties go to the lowest (clustering, cluster) index."""
    best: tuple[int, ...] | None = None
    for cl in N.clusterings:
        for c in cl.clusters:
            if best is None or len(c) > len(best):
                best = c
    if best is None:
        raise ValueError("clustering collection is empty")
    return best, len(best)


@dataclass(frozen=True)
class Grouping:
    """``g`` groups of ``k`` equal-size blocks, plus the vertices left out."""

    n: int
    groups: tuple[tuple[tuple[int, ...], ...], ...]
    separation_bound: int
    dropped: frozenset[int]

    def __init__(self, n: int, groups: Iterable[Iterable[Iterable[int]]], separation_bound: int,
                 dropped: Iterable[int] | None = None):
        gs = tuple(_sorted_sets(g) for g in groups)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "groups", gs)
        object.__setattr__(self, "separation_bound", int(separation_bound))
        inside = {v for g in gs for b in g for v in b}
        if dropped is None:
            dropped = set(range(n)) - inside
        object.__setattr__(self, "dropped", frozenset(dropped))

    @property
    def empty(self) -> bool:
        return not self.groups

    @property
    def g(self) -> int:
        return len(self.groups)

    @property
    def k(self) -> int:
        return len(self.groups[0]) if self.groups else 0

    @property
    def block_size(self) -> int:
        return len(self.groups[0][0]) if self.groups else 0

    def blocks(self) -> list[tuple[int, ...]]:
        return [b for g in self.groups for b in g]

    @property
    def load(self) -> int:
        return max(vertex_load(self.blocks()).values(), default=0)

    def load_of(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=np.int64)
        for b in self.blocks():
            out[list(b)] += 1
        return out

    def validate(self, G: MultiGraph) -> list[str]:
        problems = []
        sizes = {len(b) for b in self.blocks()}
        if len(sizes) > 1:
            problems.append(f"block sizes differ: {sorted(sizes)}")
        if 0 in sizes:
            problems.append("empty block")
        if len({len(g) for g in self.groups}) > 1:
            problems.append("groups have different numbers of blocks")
        D = G.distance_matrix
        for gi, group in enumerate(self.groups):
            for a in range(len(group)):
                if len(set(group[a])) != len(group[a]):
                    problems.append(f"group {gi} block {a} repeats a vertex")
                for b in range(a + 1, len(group)):
                    if set(group[a]) & set(group[b]):
                        problems.append(f"group {gi}: blocks {a} and {b} overlap")
                        continue
                    d = _set_distance(D, group[a], group[b])
                    if 0 <= d < self.separation_bound:
                        problems.append(f"group {gi}: blocks {a} and {b} are {d} < {self.separation_bound} apart")
        inside = {v for b in self.blocks() for v in b}
        if self.dropped != frozenset(range(self.n)) - inside:
            problems.append("dropped set does not match the vertices outside every block")
        return problems

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "g": self.g,
            "k": self.k,
            "block_size": self.block_size,
            "load": self.load,
            "separation_bound": self.separation_bound,
            "dropped": sorted(self.dropped),
            "groups": [[list(b) for b in g] for g in self.groups],
        }

    @classmethod
    def from_json(cls, data: dict) -> Grouping:
        if not data["groups"]:
            return EmptyGrouping(data["n"], data["separation_bound"])
        return cls(data["n"], data["groups"], data["separation_bound"], data["dropped"])


class EmptyGrouping(Grouping):
    """Every clustering was too small to form a group; all vertices are dropped."""

    def __init__(self, n: int, separation_bound: int):
        super().__init__(n, (), separation_bound, range(n))


def decomposition_targets(n: int, w: int, c, c_prime, k: int, k_prime: int) -> tuple[Fraction, Fraction, int]:
    c, c_prime = as_fraction(c), as_fraction(c_prime)
    threshold = c * n / w
    lower = c * n / (w * k) - Fraction(n, k_prime)
    return threshold, lower, math.ceil(lower)


def dropped_bound(n: int, w: int, load: int, c, c_prime, k: int, k_prime: int) -> Fraction:
    c, c_prime = as_fraction(c), as_fraction(c_prime)
    return (2 * c + 1 / (c_prime * k_prime) + Fraction(load * w * k) / (c * k_prime)) * n


def check_preconditions(N: WellSeparatedClustering, c, c_prime, k: int, k_prime: int,
                        enforce_cluster_size: bool = True) -> list[str]:
    c, c_prime = as_fraction(c), as_fraction(c_prime)
    failed = []
    if not (0 < c < 1):
        failed.append(f"c = {c} not in (0, 1)")
    if not (0 < c_prime < 1):
        failed.append(f"c' = {c_prime} not in (0, 1)")
    if k < 1:
        failed.append(f"k = {k} < 1")
    if k_prime < 1:
        failed.append(f"k' = {k_prime} < 1")
        return failed
    if N.width == 0:
        failed.append("no clusterings")
        return failed
    biggest = max((len(c_) for _, _, c_ in N.all_clusters()), default=0)
    if enforce_cluster_size and biggest * k_prime > N.n:
        failed.append(f"largest cluster {biggest} > n/k' = {Fraction(N.n, k_prime)}")
    if 0 < c < 1 and 0 < c_prime < 1 and k_prime < Fraction(N.width * k) / (c * (1 - c_prime)):
        failed.append(f"k' = {k_prime} < w k / (c (1 - c')) = {Fraction(N.width * k) / (c * (1 - c_prime))}")
    return failed


def take(block_clusters: Sequence[Sequence[int]], l: int) -> tuple[int, ...]:
    """First ``l`` vertices of a block read cluster by cluster.

    Vertices are sorted within each cluster and clusters keep their order, so
    only the last cluster that contributes can lose vertices.
    """
    out: list[int] = []
    for c in block_clusters:
        for v in sorted(c):
            if len(out) == l:
                return tuple(out)
            out.append(v)
    return tuple(out)


def decompose(N: WellSeparatedClustering, c, c_prime, k: int, k_prime: int,
              enforce_cluster_size: bool = True) -> Grouping:
    """Split and merge the clusterings of ``N`` into groups of ``k`` equal blocks.

    With ``enforce_cluster_size=False`` clusters larger than ``n / k'`` are
    accepted; the construction still runs but the size bounds on blocks that
    rely on small clusters may no longer hold.
    """
    failed = check_preconditions(N, c, c_prime, k, k_prime, enforce_cluster_size)
    if failed:
        raise PreconditionViolated("; ".join(failed))
    n, w = N.n, N.width
    threshold, lower, l = decomposition_targets(n, w, c, c_prime, k, k_prime)
    sep = min(cl.separation_bound for cl in N.clusterings)

    pieces: list[list[tuple[int, ...]]] = []
    for cl in N.clusterings:
        if cl.size < threshold:
            continue
        cur: list[tuple[int, ...]] = []
        size = 0
        for cluster in cl.clusters:
            cur.append(cluster)
            size += len(cluster)
            if size >= threshold:
                pieces.append(cur)
                cur, size = [], 0

    groups = []
    for piece in pieces:
        blocks: list[tuple[int, ...]] = []
        cur, size = [], 0
        for cluster in piece:
            cur.append(cluster)
            size += len(cluster)
            if size >= lower:
                blocks.append(take(cur, l))
                cur, size = [], 0
                if len(blocks) == k:
                    break
        if len(blocks) < k:
            # Ruled out by the preconditions; kept as a guard.
            raise PreconditionViolated(f"a group of {sum(map(len, piece))} vertices yielded only {len(blocks)} blocks")
        groups.append(blocks)

    if not groups:
        return EmptyGrouping(n, sep)
    return Grouping(n, groups, sep)
