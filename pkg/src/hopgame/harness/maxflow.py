"""Integral single-commodity max-flow (Dinic) and unit path decomposition."""

from __future__ import annotations

import itertools
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass

from ..errors import HopGameError


class NetworkError(HopGameError):
    """A flow network or flow assignment is malformed."""


@dataclass(frozen=True)
class FlowNetwork:
    """Directed arcs ``(tail, head, capacity)`` on nodes ``0..size-1``."""

    size: int
    arcs: tuple[tuple[int, int, int], ...]
    source: int
    sink: int

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple((int(a), int(b), int(c)) for a, b, c in self.arcs))
        if self.source == self.sink:
            raise NetworkError("source and sink coincide")
        for x in (self.source, self.sink):
            if not 0 <= x < self.size:
                raise NetworkError(f"terminal {x} outside 0..{self.size - 1}")
        for a, b, c in self.arcs:
            if not (0 <= a < self.size and 0 <= b < self.size):
                raise NetworkError(f"arc ({a}, {b}) has an endpoint outside the network")
            if c < 0:
                raise NetworkError(f"arc ({a}, {b}) has negative capacity {c}")

    def cut_capacity(self, side: set[int] | frozenset[int]) -> int:
        """Total capacity of arcs leaving ``side``."""
        return sum(c for a, b, c in self.arcs if a in side and b not in side)


@dataclass(frozen=True)
class FlowResult:
    value: int
    flow: tuple[int, ...]        # per arc, aligned with ``network.arcs``
    source_side: frozenset[int]  # nodes reachable from the source in the residual graph

    def check(self, net: FlowNetwork) -> None:
        if len(self.flow) != len(net.arcs):
            raise NetworkError("flow vector does not match the arc list")
        excess = [0] * net.size
        for (a, b, c), f in zip(net.arcs, self.flow):
            if not 0 <= f <= c:
                raise NetworkError(f"arc ({a}, {b}) carries {f} outside [0, {c}]")
            excess[a] -= f
            excess[b] += f
        for v, x in enumerate(excess):
            if v not in (net.source, net.sink) and x != 0:
                raise NetworkError(f"conservation fails at node {v}")
        if excess[net.sink] != self.value or excess[net.source] != -self.value:
            raise NetworkError("flow value does not match terminal excess")


def max_flow_integral(net: FlowNetwork) -> FlowResult:
    """Dinic's algorithm: BFS level graphs and blocking flows.

    Arcs are scanned in input order, so the result is deterministic.
    """
    size = net.size
    # Residual arcs: index 2i is arc i, 2i+1 its reverse.
    head: list[int] = []
    cap: list[int] = []
    out: list[list[int]] = [[] for _ in range(size)]
    for a, b, c in net.arcs:
        out[a].append(len(head))
        head.append(b)
        cap.append(c)
        out[b].append(len(head))
        head.append(a)
        cap.append(0)
    s, t = net.source, net.sink
    value = 0

    def levels() -> list[int]:
        level = [-1] * size
        level[s] = 0
        queue = deque([s])
        while queue:
            x = queue.popleft()
            for r in out[x]:
                if cap[r] > 0 and level[head[r]] < 0:
                    level[head[r]] = level[x] + 1
                    queue.append(head[r])
        return level

    while True:
        level = levels()
        if level[t] < 0:
            break
        nxt = [0] * size
        while True:
            # Iterative DFS for one augmenting path in the level graph.
            path: list[int] = []
            x = s
            while x != t:
                advanced = False
                while nxt[x] < len(out[x]):
                    r = out[x][nxt[x]]
                    y = head[r]
                    if cap[r] > 0 and level[y] == level[x] + 1:
                        path.append(r)
                        x = y
                        advanced = True
                        break
                    nxt[x] += 1
                if not advanced:
                    if x == s:
                        break
                    level[x] = -1  # dead end
                    r = path.pop()
                    x = head[r ^ 1]
                    nxt[x] += 1
            if x != t:
                break
            push = min(cap[r] for r in path)
            for r in path:
                cap[r] -= push
                cap[r ^ 1] += push
            value += push

    flow = tuple(cap[2 * i + 1] for i in range(len(net.arcs)))
    level = levels()
    side = frozenset(v for v in range(size) if level[v] >= 0)
    return FlowResult(value, flow, side)


def flow_path_decomposition(net: FlowNetwork, flow: Sequence[int]) -> list[tuple[int, ...]]:
    """Peel an integral flow into ``value`` unit source-sink paths (node sequences).

    Flow cycles are cancelled as they are met; they carry nothing between
    the terminals.
    """
    remaining = [int(f) for f in flow]
    if any(f < 0 for f in remaining):
        raise NetworkError("negative arc flow")
    out: list[list[int]] = [[] for _ in range(net.size)]
    for i, (a, _, _) in enumerate(net.arcs):
        out[a].append(i)
    s, t = net.source, net.sink
    paths: list[tuple[int, ...]] = []
    while True:
        arcs_used: list[int] = []
        nodes = [s]
        where = {s: 0}
        x = s
        while x != t:
            i = next((i for i in out[x] if remaining[i] > 0), None)
            if i is None:
                break
            y = net.arcs[i][1]
            if y in where:
                # Cancel the cycle closed by this arc.
                cycle = arcs_used[where[y]:] + [i]
                amount = min(remaining[j] for j in cycle)
                for j in cycle:
                    remaining[j] -= amount
                for v in nodes[where[y] + 1:]:
                    del where[v]
                del arcs_used[where[y]:]
                del nodes[where[y] + 1:]
                x = y
                continue
            arcs_used.append(i)
            nodes.append(y)
            where[y] = len(nodes) - 1
            x = y
        if x != t:
            if x != s:
                raise NetworkError(f"flow is not conserved at node {x}")
            break
        amount = min(remaining[j] for j in arcs_used)
        for j in arcs_used:
            remaining[j] -= amount
        paths.extend([tuple(nodes)] * amount)
    return paths


def min_cut_brute_force(net: FlowNetwork) -> int:
    """Minimum source-sink cut capacity by enumerating every source side."""
    others = [v for v in range(net.size) if v not in (net.source, net.sink)]
    best = None
    for r in range(len(others) + 1):
        for extra in itertools.combinations(others, r):
            cap = net.cut_capacity({net.source, *extra})
            if best is None or cap < best:
                best = cap
    return best
