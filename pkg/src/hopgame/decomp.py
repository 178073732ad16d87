"""Certify-or-cut surrogate for hop-constrained expander decompositions.

The surrogate samples local unit demands, routes each one with bounded hops,
and cuts the most congested edge copy whenever a sample needs more than the
allowed congestion.  Samples are redrawn on the current graph after every
cut, and a cut is accepted only after several clean batches in a row.  It
is a heuristic: passing every sample does not prove
that every local unit demand routes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import as_fraction
from .errors import HopGameError
from .graph.flows import CONGESTION_TOL, Demand, Infeasible
from .graph.multigraph import MultiGraph
from .graph.routing import route_within

DEFAULT_RANDOM_SAMPLES = 32
DEFAULT_ADVERSARIAL_SAMPLES = 8
DEFAULT_CONFIRMATIONS = 3


class BudgetExhausted(HopGameError):
    """Cutting more edges would exceed the allowed cut size."""

    def __init__(self, message: str, removed: tuple[int, ...] = ()):
        super().__init__(message)
        self.removed = removed


@dataclass(frozen=True)
class Cut:
    """Removed edge copies, as ids of the host graph."""

    edges: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("a cut lists the same edge copy twice")

    @property
    def size(self) -> int:
        return len(self.edges)

    def pairs(self, G: MultiGraph) -> list[tuple[int, int]]:
        return [G.edges[i] for i in self.edges]

    def apply(self, G: MultiGraph) -> MultiGraph:
        return G.without(self.edges)


@dataclass(frozen=True)
class DecompositionParams:
    h: int
    s: float = 1.0
    phi: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.h < 1:
            raise ValueError(f"hop bound h must be at least 1, got {self.h}")
        if self.s < 1:
            raise ValueError(f"length slack s must be at least 1, got {self.s}")
        if self.kappa < 1:
            raise ValueError(f"congestion slack kappa must be at least 1, got {self.kappa}")
        if self.phi <= 0:
            raise ValueError(f"phi must be positive, got {self.phi}")

    def budget(self, n: int) -> int:
        """Largest allowed cut size ``floor(h s kappa phi n)``, computed exactly."""
        return math.floor(self.h * as_fraction(self.s) * as_fraction(self.kappa) * as_fraction(self.phi) * n)

    @property
    def route_hops(self) -> int:
        return math.floor(self.h * as_fraction(self.s))

    @property
    def congestion_bound(self) -> float:
        return self.kappa / self.phi


def _close_pairs(G: MultiGraph, h: int) -> np.ndarray:
    D = G.distance_matrix
    return (D >= 1) & (D <= h)


def random_matching_demand(G: MultiGraph, h: int, rng: np.random.Generator) -> Demand:
    """A random maximal matching of ``h``-close pairs, demanded in both directions."""
    close = _close_pairs(G, h)
    free = np.ones(G.n, dtype=bool)
    entries = {}
    for v in rng.permutation(G.n):
        if not free[v]:
            continue
        cand = np.flatnonzero(close[v] & free)
        if cand.size == 0:
            continue
        u = int(rng.choice(cand))
        free[v] = free[u] = False
        entries[(int(v), u)] = 1.0
        entries[(u, int(v))] = 1.0
    return Demand(entries)


def sparsest_level_cut(G: MultiGraph, root: int) -> tuple[set[int], float] | None:
    """Sparsest cut among the BFS level prefixes from ``root`` within its component."""
    d = G.bfs(root)
    comp = np.flatnonzero(d >= 0)
    depth = int(d.max())
    if depth < 1:
        return None
    best = None
    for lvl in range(depth):
        inside = set(int(x) for x in comp[d[comp] <= lvl])
        crossing = sum(1 for u, v in G.edges if (u in inside) != (v in inside))
        smaller = min(len(inside), comp.size - len(inside))
        ratio = crossing / smaller
        if best is None or ratio < best[1]:
            best = (inside, ratio)
    return best


def adversarial_demand(G: MultiGraph, h: int, rng: np.random.Generator) -> Demand:
    """Pair ``h``-close vertices across the sparsest BFS level cut of a random root."""
    if G.m == 0:
        return Demand({})
    roots = np.flatnonzero(G.degrees() > 0)
    found = sparsest_level_cut(G, int(rng.choice(roots)))
    if found is None:
        return Demand({})
    inside, _ = found
    close = _close_pairs(G, h)
    D = G.distance_matrix
    side = np.zeros(G.n, dtype=bool)
    side[list(inside)] = True
    comp = D[min(inside)] >= 0
    # Vertices nearest the cut first, so pairs are packed against the bottleneck.
    crossing_dist = np.array([
        D[v][comp & (side != side[v])].min() if (comp & (side != side[v])).any() else np.inf
        for v in range(G.n)])
    free = np.ones(G.n, dtype=bool)
    entries = {}
    order = sorted(inside, key=lambda v: (crossing_dist[v], rng.random()))
    for v in order:
        cand = np.flatnonzero(close[v] & free & ~side)
        if cand.size == 0:
            continue
        u = int(cand[np.argmin(crossing_dist[cand])])
        free[u] = False
        entries[(v, u)] = 1.0
        entries[(u, v)] = 1.0
    return Demand(entries)


def restrict_to_close(D: Demand, G: MultiGraph, h: int) -> Demand:
    close = _close_pairs(G, h)
    return Demand({p: x for p, x in D.entries.items() if close[p]})


@dataclass
class DecompositionReport:
    """What the surrogate did, for transcripts."""

    cut: Cut
    budget: int
    samples: int
    worst_congestion: float
    approximate: bool
    log: list[str] = field(default_factory=list)


def expander_decomposition(G: MultiGraph, params: DecompositionParams,
                           sampler_budget: int = DEFAULT_RANDOM_SAMPLES,
                           adversarial: int = DEFAULT_ADVERSARIAL_SAMPLES, seed: int = 0,
                           backend: str = "auto", confirmations: int = DEFAULT_CONFIRMATIONS) -> Cut:
    return decompose_with_report(G, params, sampler_budget, adversarial, seed, backend, confirmations).cut


def decompose_with_report(G: MultiGraph, params: DecompositionParams,
                          sampler_budget: int = DEFAULT_RANDOM_SAMPLES,
                          adversarial: int = DEFAULT_ADVERSARIAL_SAMPLES, seed: int = 0,
                          backend: str = "auto", confirmations: int = DEFAULT_CONFIRMATIONS
                          ) -> DecompositionReport:
    """Cut edges until ``confirmations`` fresh sample batches in a row all route within the bounds.

    Every batch is drawn on the current graph, so after a cut the samples
    follow its new distances.
    """
    if confirmations < 1:
        raise ValueError("need at least one confirming batch")
    budget = params.budget(G.n)
    hops = params.route_hops
    bound = params.congestion_bound
    removed: set[int] = set()
    log: list[str] = []
    approximate = backend == "mwu"
    clean = checked = 0
    worst = 0.0
    while clean < confirmations:
        current = G.without(removed)
        rng = np.random.default_rng([seed, len(removed), clean])
        batch = [random_matching_demand(current, params.h, rng) for _ in range(sampler_budget)]
        batch += [adversarial_demand(current, params.h, rng) for _ in range(adversarial)]
        failed = None
        for D in batch:
            Dc = restrict_to_close(D, current, params.h)
            if not Dc.entries:
                continue
            sol = route_within(current, Dc, hops, bound, backend)
            if isinstance(sol, Infeasible):
                raise HopGameError(f"sampled pair {sol.pair} is not within {hops} hops")
            if sol.congestion > bound + CONGESTION_TOL:
                failed = sol
                break
            worst = max(worst, sol.congestion)
        if failed is None:
            clean += 1
            checked += len(batch)
            continue
        if len(removed) + 1 > budget:
            raise BudgetExhausted(
                f"cut of {len(removed)} edges is at the budget {budget} and a sample "
                f"still needs congestion {failed.congestion:.4g} > {bound:.4g}",
                tuple(sorted(removed)))
        # Map the most loaded bundle back to a copy id of the host graph.
        loads = failed.flow.bundle_loads()
        mult = current.bundles
        e = max(loads, key=lambda b: (loads[b] / mult[b], b))
        copy = next(i for i, pair in enumerate(G.edges) if pair == e and i not in removed)
        removed.add(copy)
        log.append(f"cut edge {e} (id {copy}) at congestion {failed.congestion:.4g}")
        clean = checked = 0
        worst = 0.0
    return DecompositionReport(Cut(tuple(removed)), budget, checked, worst, approximate, log)
