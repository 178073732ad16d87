"""Demands, path flows and routing certificates."""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field

from ..errors import HopGameError
from .multigraph import MultiGraph, edge_key

DEMAND_TOL = 1e-6
CONGESTION_TOL = 1e-6


class DemandError(HopGameError):
    """Negative demand values or endpoints outside the graph."""


class FlowError(HopGameError):
    """A flow path that is not simple or uses a missing edge."""


@dataclass(frozen=True)
class Demand:
    """Directed demand ``D(u, v) >= 0``; zero entries are dropped."""

    entries: Mapping[tuple[int, int], float]

    def __post_init__(self):
        clean = {}
        for (u, v), val in self.entries.items():
            val = float(val)
            if val < 0 or math.isnan(val):
                raise DemandError(f"demand ({u}, {v}) = {val} is negative")
            if val > 0:
                clean[(int(u), int(v))] = clean.get((int(u), int(v)), 0.0) + val
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @property
    def size(self) -> float:
        return math.fsum(self.entries.values())

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def check_endpoints(self, G: MultiGraph) -> None:
        for u, v in self.entries:
            if not (0 <= u < G.n and 0 <= v < G.n):
                raise DemandError(f"demand pair ({u}, {v}) outside graph with n={G.n}")

    def is_unit(self, tol: float = 1e-12) -> bool:
        out: dict[int, float] = defaultdict(float)
        inn: dict[int, float] = defaultdict(float)
        for (u, v), val in self.entries.items():
            out[u] += val
            inn[v] += val
        return all(x <= 1 + tol for x in out.values()) and all(x <= 1 + tol for x in inn.values())

    def is_h_hop(self, G: MultiGraph, h: int) -> bool:
        D = G.distance_matrix
        return all(0 <= D[u, v] <= h for u, v in self.entries)


@dataclass(frozen=True)
class Flow:
    """Map from simple vertex path to positive flow value."""

    paths: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[tuple[int, ...], float] = {}
        for p, val in self.paths.items():
            p = tuple(int(x) for x in p)
            if not p:
                raise FlowError("empty path")
            if len(set(p)) != len(p):
                raise FlowError(f"path {p} is not simple")
            if val <= 0:
                raise FlowError(f"path {p} has non-positive value {val}")
            clean[p] = clean.get(p, 0.0) + float(val)
        object.__setattr__(self, "paths", clean)

    @property
    def value(self) -> float:
        return math.fsum(self.paths.values())

    def hop(self) -> int:
        return max((len(p) - 1 for p in self.paths), default=0)

    def routed_demand(self) -> Demand:
        acc: dict[tuple[int, int], float] = defaultdict(float)
        for p, val in self.paths.items():
            acc[(p[0], p[-1])] += val
        return Demand(acc)

    def bundle_loads(self) -> dict[tuple[int, int], float]:
        loads: dict[tuple[int, int], float] = defaultdict(float)
        for p, val in self.paths.items():
            for a, b in zip(p, p[1:]):
                loads[edge_key(a, b)] += val
        return dict(loads)

    def check_valid(self, G: MultiGraph) -> None:
        bundles = G.bundles
        for p in self.paths:
            for a, b in zip(p, p[1:]):
                if edge_key(a, b) not in bundles:
                    raise FlowError(f"path {p} uses missing edge ({a}, {b})")

    def congestion(self, G: MultiGraph) -> float:
        """Largest per-copy load, spreading each bundle's flow over its copies."""
        self.check_valid(G)
        bundles = G.bundles
        return max((val / bundles[e] for e, val in self.bundle_loads().items()), default=0.0)


@dataclass(frozen=True)
class RoutingWitness:
    flow: Flow
    max_hop: int
    max_congestion: float
    approximate: bool = False

    def recheck(self, G: MultiGraph, D: Demand, t: int, eta: float) -> list[str]:
        """Recompute every field from the raw path map; return violated conditions."""
        problems = []
        try:
            cong = self.flow.congestion(G)
        except FlowError as exc:
            return [str(exc)]
        routed = self.flow.routed_demand().entries
        for pair in set(routed) | set(D.entries):
            if abs(routed.get(pair, 0.0) - D.entries.get(pair, 0.0)) > DEMAND_TOL:
                problems.append(f"pair {pair} routed {routed.get(pair, 0.0)} of {D.entries.get(pair, 0.0)}")
        if self.flow.hop() != self.max_hop:
            problems.append(f"recorded hop {self.max_hop} but paths give {self.flow.hop()}")
        if self.max_hop > t:
            problems.append(f"hop {self.max_hop} exceeds {t}")
        if abs(cong - self.max_congestion) > CONGESTION_TOL:
            problems.append(f"recorded congestion {self.max_congestion} but paths give {cong}")
        if cong > eta + CONGESTION_TOL:
            problems.append(f"congestion {cong} exceeds {eta}")
        return problems


@dataclass(frozen=True)
class Infeasible:
    """Why a demand cannot be routed.

    ``reason`` is ``"distance"`` when ``pair`` lies more than ``t`` hops apart
    (``distance`` is ``None`` for disconnected pairs), or ``"congestion"``
    when the least achievable congestion exceeds the requested bound.
    """

    reason: str
    pair: tuple[int, int] | None = None
    distance: int | None = None
    min_congestion: float | None = None
    approximate: bool = False

    def __bool__(self) -> bool:
        return False
