"""Hop-constrained fractional routing of multi-commodity demands.

Three backends solve the same problem, minimising congestion subject to
routing every demand entry along paths of at most ``t`` edges:

* ``paths``: enumerate simple paths up to ``t`` hops, then solve a path LP.
* ``layered``: an arc LP on the ``t``-layer time-expanded graph.  It has the
  same optimum as ``paths`` (a walk can always be shortcut to a simple path
  without adding hops or load) and avoids enumerating paths.
* ``mwu``: multiplicative weights over hop-bounded shortest paths.  Its
  flows are genuine but possibly suboptimal, so negative answers are
  approximate.
* ``shortest``: one BFS shortest path per pair.  Cheap, feasible whenever
  the distance check passes, and only an upper bound on the optimum.

``auto`` uses ``paths`` while the path budget allows, then ``layered``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from ..errors import HopGameError, InvariantViolation
from .flows import CONGESTION_TOL, Demand, Flow, Infeasible, RoutingWitness
from .multigraph import MultiGraph, edge_key

DEFAULT_PATH_BUDGET = 10**6
BACKENDS = ("paths", "layered", "mwu", "shortest", "auto")


class PathBudgetExceeded(HopGameError):
    """Path enumeration would exceed the configured budget."""


class SolverFailure(InvariantViolation):
    """The LP solver returned a status other than optimal."""


@dataclass(frozen=True)
class RoutingSolution:
    congestion: float
    flow: Flow
    approximate: bool = False


def _distance_certificate(G: MultiGraph, D: Demand, t: int) -> Infeasible | None:
    for u, v in D.pairs:
        d = int(G.bfs(u)[v])
        if d < 0 or d > t:
            return Infeasible("distance", pair=(u, v), distance=None if d < 0 else d)
    return None


def enumerate_paths(G: MultiGraph, u: int, v: int, t: int, budget: int = DEFAULT_PATH_BUDGET,
                    to_target: np.ndarray | None = None) -> list[tuple[int, ...]]:
    """All simple ``u``-``v`` paths with at most ``t`` edges (bundles, not copies)."""
    if u == v:
        return [(u,)]
    if to_target is None:
        to_target = G.bfs(v)
    nbrs = G.neighbor_sets
    out: list[tuple[int, ...]] = []
    path = [u]
    on_path = {u}

    def walk(x: int) -> None:
        used = len(path) - 1
        for y in nbrs[x]:
            if y in on_path:
                continue
            dy = to_target[y]
            if dy < 0 or used + 1 + dy > t:
                continue
            if y == v:
                out.append(tuple(path) + (v,))
                if len(out) > budget:
                    raise PathBudgetExceeded(f"more than {budget} paths for pair ({u}, {v})")
                continue
            path.append(y)
            on_path.add(y)
            walk(y)
            path.pop()
            on_path.discard(y)

    walk(u)
    return out


def count_paths(G: MultiGraph, D: Demand, t: int, budget: int = DEFAULT_PATH_BUDGET) -> int:
    total = 0
    for u, v in D.pairs:
        total += len(enumerate_paths(G, u, v, t, budget - total))
        if total > budget:
            raise PathBudgetExceeded(f"more than {budget} paths in total")
    return total


def _solve(c, A_ub, b_ub, A_eq, b_eq, n_vars, method="highs"):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * n_vars, method=method)
    if res.status != 0:
        raise SolverFailure(f"LP solver status {res.status}: {res.message}")
    return res.x


def _finish(G: MultiGraph, D: Demand, per_pair: dict[tuple[int, int], dict[tuple[int, ...], float]],
            approximate: bool = False) -> RoutingSolution:
    # Drop solver dust, then rescale each pair so it routes its demand exactly.
    paths: dict[tuple[int, ...], float] = {}
    for pair, flows in per_pair.items():
        want = D.entries[pair]
        kept = {p: x for p, x in flows.items() if x > 1e-12 * max(want, 1.0)}
        got = math.fsum(kept.values())
        if got <= 0:
            raise SolverFailure(f"no flow recovered for pair {pair}")
        for p, x in kept.items():
            paths[p] = paths.get(p, 0.0) + x * want / got
    flow = Flow(paths)
    return RoutingSolution(flow.congestion(G), flow, approximate)


def _solve_paths(G: MultiGraph, D: Demand, t: int, budget: int) -> RoutingSolution:
    all_paths: list[tuple[int, ...]] = []
    owner: list[tuple[int, int]] = []
    for u, v in D.pairs:
        found = enumerate_paths(G, u, v, t, budget - len(all_paths))
        all_paths.extend(found)
        owner.extend([(u, v)] * len(found))
        if len(all_paths) > budget:
            raise PathBudgetExceeded(f"more than {budget} paths in total")
    bundles = sorted(G.bundles)
    bidx = {e: i for i, e in enumerate(bundles)}
    pair_idx = {p: i for i, p in enumerate(D.pairs)}
    n_x = len(all_paths)
    lam = n_x
    rows, cols = [], []
    eq_rows, eq_cols = [], []
    for j, p in enumerate(all_paths):
        eq_rows.append(pair_idx[owner[j]])
        eq_cols.append(j)
        for a, b in zip(p, p[1:]):
            rows.append(bidx[edge_key(a, b)])
            cols.append(j)
    vals = [1.0] * len(rows)
    for e, i in bidx.items():
        rows.append(i)
        cols.append(lam)
        vals.append(-float(G.bundles[e]))
    A_ub = coo_matrix((vals, (rows, cols)), shape=(len(bundles), n_x + 1)).tocsr()
    A_eq = coo_matrix(([1.0] * len(eq_rows), (eq_rows, eq_cols)), shape=(len(D), n_x + 1)).tocsr()
    b_eq = np.array([D.entries[p] for p in D.pairs])
    c = np.zeros(n_x + 1)
    c[lam] = 1.0
    if not bundles:
        A_ub, b_ub = None, None
    else:
        b_ub = np.zeros(len(bundles))
    x = _solve(c, A_ub, b_ub, A_eq, b_eq, n_x + 1)
    per_pair: dict[tuple[int, int], dict] = defaultdict(dict)
    for j, p in enumerate(all_paths):
        per_pair[owner[j]][p] = x[j]
    return _finish(G, D, per_pair)


def _shortcut(walk: list[int]) -> tuple[int, ...]:
    """Remove cycles from a walk, keeping its endpoints."""
    out: list[int] = []
    pos: dict[int, int] = {}
    for x in walk:
        if x in pos:
            cut = pos[x]
            for y in out[cut + 1:]:
                del pos[y]
            del out[cut + 1:]
        else:
            pos[x] = len(out)
            out.append(x)
    return tuple(out)


def _solve_layered(G: MultiGraph, D: Demand, t: int) -> RoutingSolution:
    bundles = sorted(G.bundles)
    bidx = {e: i for i, e in enumerate(bundles)}
    arcs = [(a, b) for a, b in bundles] + [(b, a) for a, b in bundles]
    dist = G.distance_matrix
    # Variables: per commodity, per layer arc (i, a, b), plus absorption (i) at the sink.
    var_info: list[tuple[int, str, int, int, int]] = []
    ub_rows, ub_cols = [], []
    eq_rows, eq_cols, eq_vals = [], [], []
    b_eq: list[float] = []
    n_eq = 0
    for ci, (u, v) in enumerate(D.pairs):
        node_row: dict[tuple[int, int], int] = {}

        def row(x, i):
            nonlocal n_eq
            key = (x, i)
            if key not in node_row:
                node_row[key] = n_eq
                b_eq.append(D.entries[(u, v)] if key == (u, 0) else 0.0)
                n_eq += 1
            return node_row[key]

        row(u, 0)
        for i in range(t):
            for a, b in arcs:
                if dist[u, a] < 0 or dist[u, a] > i or dist[b, v] < 0 or dist[b, v] > t - i - 1:
                    continue
                j = len(var_info)
                var_info.append((ci, "arc", i, a, b))
                # Leaves (a, i), enters (b, i + 1).
                eq_rows.extend([row(a, i), row(b, i + 1)])
                eq_cols.extend([j, j])
                eq_vals.extend([1.0, -1.0])
                ub_rows.append(bidx[edge_key(a, b)])
                ub_cols.append(j)
        for i in range(t + 1):
            if (v, i) in node_row or (i == 0 and u == v):
                j = len(var_info)
                var_info.append((ci, "sink", i, v, v))
                eq_rows.append(row(v, i))
                eq_cols.append(j)
                eq_vals.append(1.0)
    n_x = len(var_info)
    lam = n_x
    ub_vals = [1.0] * len(ub_rows)
    for e, i in bidx.items():
        ub_rows.append(i)
        ub_cols.append(lam)
        ub_vals.append(-float(G.bundles[e]))
    A_eq = coo_matrix((eq_vals, (eq_rows, eq_cols)), shape=(n_eq, n_x + 1)).tocsr()
    if bundles:
        A_ub = coo_matrix((ub_vals, (ub_rows, ub_cols)), shape=(len(bundles), n_x + 1)).tocsr()
        b_ub = np.zeros(len(bundles))
    else:
        A_ub, b_ub = None, None
    c = np.zeros(n_x + 1)
    c[lam] = 1.0
    # Interior point with crossover is markedly faster on these layered programs.
    x = _solve(c, A_ub, b_ub, A_eq, np.array(b_eq), n_x + 1, method="highs-ipm")

    per_pair: dict[tuple[int, int], dict] = defaultdict(dict)
    for ci, (u, v) in enumerate(D.pairs):
        out: dict[tuple[int, int], list[list]] = defaultdict(list)
        sink: dict[int, list] = {}
        for j, (cj, kind, i, a, b) in enumerate(var_info):
            if cj != ci or x[j] <= 0:
                continue
            if kind == "arc":
                out[(a, i)].append([x[j], b])
            else:
                sink[i] = [x[j]]
        want = D.entries[(u, v)]
        remaining = want
        # Peel walks in the layered DAG; each follows the heaviest remaining option.
        for _ in range(10 * (len(var_info) + 1)):
            if remaining <= 1e-12 * max(want, 1.0):
                break
            node, i = u, 0
            walk = [u]
            choices = []
            while True:
                opts = []
                if node == v and i in sink and sink[i][0] > 0:
                    opts.append((sink[i][0], "sink", sink[i]))
                for cell in out.get((node, i), ()):
                    if cell[0] > 0:
                        opts.append((cell[0], "arc", cell))
                if not opts:
                    break
                val, kind, cell = max(opts, key=lambda o: o[0])
                choices.append(cell)
                if kind == "sink":
                    break
                node, i = cell[1], i + 1
                walk.append(node)
            if not choices or choices[-1] is not sink.get(i):
                break
            amount = min(cell[0] for cell in choices)
            for cell in choices:
                cell[0] -= amount
            p = _shortcut(walk)
            per_pair[(u, v)][p] = per_pair[(u, v)].get(p, 0.0) + amount
            remaining -= amount
    return _finish(G, D, per_pair)


def _hop_bounded_shortest(G: MultiGraph, lengths: dict[tuple[int, int], float], u: int, v: int,
                          t: int) -> tuple[int, ...] | None:
    """Cheapest walk of at most ``t`` edges under positive bundle lengths."""
    inf = math.inf
    best = [inf] * G.n
    best[u] = 0.0
    parents: list[dict[int, int]] = []
    cur = {u: 0.0}
    layers = [dict(cur)]
    for _ in range(t):
        nxt: dict[int, float] = {}
        par: dict[int, int] = {}
        for x, d in cur.items():
            for y in G.neighbor_sets[x]:
                nd = d + lengths[edge_key(x, y)]
                if nd < nxt.get(y, inf) and nd < best[y]:
                    nxt[y] = nd
                    par[y] = x
        for y, d in nxt.items():
            best[y] = min(best[y], d)
        parents.append(par)
        layers.append(nxt)
        cur = nxt
    if best[v] == inf:
        return None
    layer = min((i for i, lay in enumerate(layers) if v in lay), key=lambda i: layers[i][v])
    walk = [v]
    x = v
    for i in range(layer, 0, -1):
        x = parents[i - 1][x]
        walk.append(x)
    return _shortcut(walk[::-1])


def _solve_shortest(G: MultiGraph, D: Demand) -> RoutingSolution:
    dist = G.distance_matrix
    nbrs = [sorted(x) for x in G.neighbor_sets]
    per_pair: dict[tuple[int, int], dict] = {}
    for u, v in D.pairs:
        to_v = dist[:, v]
        path = [u]
        while path[-1] != v:
            x = path[-1]
            path.append(next(y for y in nbrs[x] if to_v[y] == to_v[x] - 1))
        per_pair[(u, v)] = {tuple(path): D.entries[(u, v)]}
    return _finish(G, D, per_pair, approximate=True)


def _solve_mwu(G: MultiGraph, D: Demand, t: int, rounds: int = 200) -> RoutingSolution:
    bundles = G.bundles
    load = {e: 0.0 for e in bundles}
    per_pair: dict[tuple[int, int], dict] = defaultdict(dict)
    beta = math.log(max(len(bundles), 2))
    peak = 0.0

    def length(e):
        # Exponent stays within [0, beta] because every load is at most ``peak``.
        return math.exp(beta * (load[e] / bundles[e]) / peak) / bundles[e] if peak > 0 else 1.0 / bundles[e]

    for _ in range(rounds):
        lengths = {e: length(e) for e in bundles}
        for (u, v), want in D.entries.items():
            p = (u,) if u == v else _hop_bounded_shortest(G, lengths, u, v, t)
            if p is None:
                raise InvariantViolation(f"pair ({u}, {v}) lost its {t}-hop path")
            amt = want / rounds
            per_pair[(u, v)][p] = per_pair[(u, v)].get(p, 0.0) + amt
            for a, b in zip(p, p[1:]):
                e = edge_key(a, b)
                load[e] += amt
                peak = max(peak, load[e] / bundles[e])
                lengths[e] = length(e)
    return _finish(G, D, per_pair, approximate=True)


def solve_routing(G: MultiGraph, D: Demand, t: int, backend: str = "auto",
                  path_budget: int = DEFAULT_PATH_BUDGET) -> RoutingSolution | Infeasible:
    """Least-congestion ``t``-hop routing of ``D``, or a distance certificate."""
    if backend not in BACKENDS:
        raise ValueError(f"unknown routing backend {backend!r}")
    D.check_endpoints(G)
    if not D.entries:
        return RoutingSolution(0.0, Flow({}))
    cert = _distance_certificate(G, D, t)
    if cert is not None:
        return cert
    if backend == "paths":
        return _solve_paths(G, D, t, path_budget)
    if backend == "layered":
        return _solve_layered(G, D, t)
    if backend == "mwu":
        return _solve_mwu(G, D, t)
    if backend == "shortest":
        return _solve_shortest(G, D)
    try:
        return _solve_paths(G, D, t, path_budget)
    except PathBudgetExceeded:
        return _solve_layered(G, D, t)


def route_within(G: MultiGraph, D: Demand, t: int, bound: float, backend: str = "auto",
                 path_budget: int = DEFAULT_PATH_BUDGET) -> RoutingSolution | Infeasible:
    """Shortest-path routing if it already meets ``bound``, else a ``backend`` solve.

    A shortest-path flow is feasible, so when its congestion is within
    ``bound`` no optimisation can change the verdict.
    """
    quick = solve_routing(G, D, t, "shortest")
    if isinstance(quick, Infeasible) or quick.congestion <= bound + CONGESTION_TOL:
        return quick
    return solve_routing(G, D, t, backend, path_budget)


def route_demand_exact(G: MultiGraph, D: Demand, t: int, backend: str = "paths",
                       path_budget: int = DEFAULT_PATH_BUDGET) -> float:
    """Least achievable congestion over ``t``-hop fractional routings.

    Returns ``math.inf`` when some demanded pair is more than ``t`` hops apart.
    """
    sol = solve_routing(G, D, t, backend, path_budget)
    return math.inf if isinstance(sol, Infeasible) else sol.congestion


def verify_routing(G: MultiGraph, D: Demand, t: int, eta: float, backend: str = "paths",
                   path_budget: int = DEFAULT_PATH_BUDGET) -> RoutingWitness | Infeasible:
    """Route ``D`` along ``t``-hop paths with congestion at most ``eta``, or explain why not."""
    sol = solve_routing(G, D, t, backend, path_budget)
    if isinstance(sol, Infeasible):
        return sol
    if sol.congestion > eta + CONGESTION_TOL:
        return Infeasible("congestion", min_congestion=sol.congestion, approximate=sol.approximate)
    return RoutingWitness(sol.flow, sol.flow.hop(), sol.congestion, sol.approximate)
