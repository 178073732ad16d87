"""Sparse cut or expander embedding through single-commodity max-flows.

A cut strategy plays bisections of a set of units.  Each bisection becomes a
max-flow problem in ``G``: units on one side are sources, units on the other
side are sinks, and every edge copy of ``G`` carries ``ceil(1/phi)``.  A
saturating flow decomposes into unit paths that embed a perfect matching of
the units; a short flow exposes a cut of ``G`` whose sparsity is below
``phi``.

Two unit systems are offered.  In ``volume`` mode a vertex owns one unit per
incident edge copy, so sparsity is measured against volume and every
bisection has exactly ``vol(V) / 2`` units per side.  In ``vertex`` mode each
vertex is one unit; odd ``n`` gets an isolated auxiliary unit that is
matched without a path.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

import numpy as np

from ..clustering import as_fraction
from ..errors import HopGameError
from ..graph.multigraph import MultiGraph, edge_key
from .maxflow import FlowNetwork, flow_path_decomposition, max_flow_integral

MODES = ("volume", "vertex")


class StrategyExhausted(HopGameError):
    """The cut strategy gave up before the game finished."""


def sparsity(G: MultiGraph, side: set[int] | frozenset[int]) -> Fraction:
    """``|E(S, V - S)| / min(vol S, vol (V - S))``; 0 when one side has no volume."""
    side = frozenset(side)
    crossing = len(G.cut_edges(side))
    vol = G.volume(side)
    smaller = min(vol, 2 * G.m - vol)
    if smaller == 0:
        return Fraction(0)  # nothing can cross
    return Fraction(crossing, smaller)


@dataclass(frozen=True)
class SparseCut:
    vertices: frozenset[int]
    sparsity: Fraction
    crossing: tuple[tuple[int, int], ...]  # crossing edge copies, as vertex pairs
    round: int
    flow_value: int
    target: int
    reason: str = "bottleneck"

    def to_json(self) -> dict:
        return {
            "kind": "cut", "vertices": sorted(self.vertices), "sparsity": str(self.sparsity),
            "sparsity_value": float(self.sparsity), "crossing": [list(e) for e in self.crossing],
            "round": self.round, "flow_value": self.flow_value, "target": self.target,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class Embedding:
    """Matchings of units, each matched pair carried by a path of ``G``.

    ``paths[r][i]`` is the vertex path for ``matchings[r][i]``; ``None`` marks
    a pair that involves the auxiliary unit or a self pair with no path.
    """

    owner: tuple[int | None, ...]
    matchings: tuple[tuple[tuple[int, int], ...], ...]
    paths: tuple[tuple[tuple[int, ...] | None, ...], ...]
    capacity: int
    congestion: Fraction
    padded: bool
    mixing_gap: float

    @property
    def rounds(self) -> int:
        return len(self.matchings)

    @property
    def congestion_bound(self) -> int:
        return self.rounds * self.capacity

    def recount(self, G: MultiGraph) -> Fraction:
        """Largest number of embedded paths over one edge copy, recomputed from the paths."""
        return embedding_congestion(G, (p for rnd in self.paths for p in rnd if p))

    def to_json(self) -> dict:
        return {
            "kind": "embedding", "rounds": self.rounds, "capacity": self.capacity,
            "congestion": str(self.congestion), "congestion_value": float(self.congestion),
            "congestion_bound": self.congestion_bound, "padded": self.padded,
            "mixing_gap": self.mixing_gap,
            "matchings": [[list(pair) for pair in m] for m in self.matchings],
            "paths": [[list(p) if p else None for p in rnd] for rnd in self.paths],
        }


def embedding_congestion(G: MultiGraph, paths) -> Fraction:
    load: Counter = Counter()
    for p in paths:
        for a, b in zip(p, p[1:]):
            load[edge_key(a, b)] += 1
    mult = G.bundles
    for e in load:
        if e not in mult:
            raise HopGameError(f"embedded path uses {e}, which is not an edge")
    return max((Fraction(x, mult[e]) for e, x in load.items()), default=Fraction(0))


class CutStrategy(Protocol):
    rounds: int

    def reset(self, units: int, rng: np.random.Generator) -> None: ...

    def propose(self) -> Sequence[int]: ...

    def observe(self, matching: Sequence[tuple[int, int]]) -> None: ...


@dataclass
class KRVStrategy:
    """Random projections of the lazy matching walk.

    The walk matrix starts at the identity; each matching averages the rows of
    matched units.  A bisection sorts units by their projection onto a random
    direction orthogonal to the all-ones vector.
    """

    rounds: int | None = None
    F: np.ndarray = field(default=None, repr=False)
    rng: np.random.Generator = field(default=None, repr=False)

    def reset(self, units: int, rng: np.random.Generator) -> None:
        if self.rounds is None:
            self.rounds = max(1, math.ceil(math.log2(max(units, 2))) ** 2)
        self.F = np.eye(units)
        self.rng = rng

    def propose(self) -> list[int]:
        N = self.F.shape[0]
        r = self.rng.standard_normal(N)
        r -= r.mean()
        u = self.F @ r
        order = sorted(range(N), key=lambda i: (u[i], i))
        return order[: N // 2]

    def observe(self, matching: Sequence[tuple[int, int]]) -> None:
        for a, b in matching:
            avg = (self.F[a] + self.F[b]) / 2
            self.F[a] = avg
            self.F[b] = avg

    def gap(self) -> float:
        N = self.F.shape[0]
        return float(np.abs(self.F - 1.0 / N).max()) if N else 0.0


def _units(G: MultiGraph, mode: str) -> tuple[list[int | None], bool]:
    if mode == "volume":
        owner: list[int | None] = []
        for v in range(G.n):
            owner.extend([v] * G.degree(v))
        return owner, False
    owner = list(range(G.n))
    if G.n % 2:
        owner.append(None)
        return owner, True
    return owner, False


def _component_cut(G: MultiGraph) -> frozenset[int] | None:
    """A connected component with edges, when edges span more than one component."""
    with_edges = [v for v in range(G.n) if G.degree(v) > 0]
    if not with_edges:
        return None
    reach = G.bfs(with_edges[0])
    comp = frozenset(int(v) for v in np.flatnonzero(reach >= 0))
    if all(v in comp for v in with_edges):
        return None
    return comp


def krv_reduce(G: MultiGraph, phi: float, cut_strategy: CutStrategy | None = None, seed: int = 0,
               mode: str = "volume") -> SparseCut | Embedding:
    """Play the cut strategy against max-flow matchings in ``G``."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    phi_q = as_fraction(phi)
    if phi_q <= 0:
        raise ValueError("phi must be positive")
    if G.m == 0:
        raise HopGameError("graph has no edges")
    capacity = math.ceil(1 / phi_q)
    comp = _component_cut(G)
    if comp is not None:
        return SparseCut(comp, sparsity(G, comp), (), 0, 0, 0, reason="disconnected")

    owner, padded = _units(G, mode)
    N = len(owner)
    strategy = cut_strategy if cut_strategy is not None else KRVStrategy()
    rng = np.random.default_rng(seed)
    strategy.reset(N, rng)
    src, dst = G.n, G.n + 1
    interior = []
    for (a, b), mu in sorted(G.bundles.items()):
        interior.append((a, b, capacity * mu))
        interior.append((b, a, capacity * mu))
    matchings, all_paths = [], []
    for rnd in range(strategy.rounds):
        try:
            S = sorted(int(x) for x in strategy.propose())
        except StopIteration as exc:
            raise StrategyExhausted(f"cut strategy stopped in round {rnd}") from exc
        in_S = set(S)
        if len(in_S) != N // 2 or not all(0 <= x < N for x in in_S):
            raise StrategyExhausted(f"round {rnd}: strategy did not return a bisection of {N} units")
        T = [x for x in range(N) if x not in in_S]
        out_cap = Counter(owner[x] for x in S if owner[x] is not None)
        in_cap = Counter(owner[x] for x in T if owner[x] is not None)
        target = min(sum(out_cap.values()), sum(in_cap.values()))
        arcs = ([(src, v, c) for v, c in sorted(out_cap.items())]
                + [(v, dst, c) for v, c in sorted(in_cap.items())] + interior)
        net = FlowNetwork(G.n + 2, tuple(arcs), src, dst)
        res = max_flow_integral(net)
        if res.value < target:
            side = frozenset(v for v in res.source_side if v < G.n)
            crossing = tuple(G.edges[i] for i in G.cut_edges(side))
            return SparseCut(side, sparsity(G, side), crossing, rnd, res.value, target)
        flow = _cancel_opposite(net, res.flow)
        matching, paths = _match_units(S, T, owner, flow_path_decomposition(net, flow))
        strategy.observe(matching)
        matchings.append(tuple(matching))
        all_paths.append(tuple(paths))
    gap = strategy.gap() if hasattr(strategy, "gap") else math.nan
    congestion = embedding_congestion(G, (p for rnd in all_paths for p in rnd if p))
    return Embedding(tuple(owner), tuple(matchings), tuple(all_paths), capacity, congestion, padded, gap)


def _cancel_opposite(net: FlowNetwork, flow: Sequence[int]) -> list[int]:
    """Remove flow running both ways over the same pair, so each edge copy is used once per round."""
    flow = list(flow)
    index = {}
    for i, (a, b, _) in enumerate(net.arcs):
        index.setdefault((a, b), []).append(i)
    for i, (a, b, _) in enumerate(net.arcs):
        for j in index.get((b, a), []):
            d = min(flow[i], flow[j])
            if d:
                flow[i] -= d
                flow[j] -= d
    return flow


def _match_units(S: list[int], T: list[int], owner: Sequence[int | None],
                 node_paths: list[tuple[int, ...]]) -> tuple[list[tuple[int, int]], list]:
    left: dict[int, list[int]] = {}
    right: dict[int, list[int]] = {}
    for x in S:
        if owner[x] is not None:
            left.setdefault(owner[x], []).append(x)
    for x in T:
        if owner[x] is not None:
            right.setdefault(owner[x], []).append(x)
    for queue in (*left.values(), *right.values()):
        queue.reverse()
    matching, paths = [], []
    for p in node_paths:
        inner = p[1:-1]
        a = left[inner[0]].pop()
        b = right[inner[-1]].pop()
        matching.append((a, b))
        paths.append(inner if len(inner) > 1 else None)
    # Units left over (auxiliary padding) are matched in sorted order without a path.
    rest_a = sorted(x for q in left.values() for x in q) + [x for x in S if owner[x] is None]
    rest_b = sorted(x for q in right.values() for x in q) + [x for x in T if owner[x] is None]
    for a, b in zip(sorted(rest_a), sorted(rest_b)):
        matching.append((a, b))
        paths.append(None)
    return matching, paths
