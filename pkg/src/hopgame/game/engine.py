"""Main loop of the cut strategy, the completion phase, and certification."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..clustering import Grouping, build_cover, decompose, largest_cluster
from ..decomp import DecompositionParams, decompose_with_report
from ..errors import HopGameError
from ..graph.flows import Demand, Infeasible
from ..graph.multigraph import MultiGraph
from ..graph.routing import route_within, solve_routing
from .config import GameConfig
from .players import PLAYERS, MatchingBatch, Player, PlayerContext, PlayerRefused, check_batch
from .walk import (
    REMOVED,
    CommodityState,
    DegreeViolation,
    GroupMatching,
    build_step,
    column_entropies,
    commodity_step,
    fan_counts,
    locality_violations,
    measure_typicality,
    walk_value_bounds,
)

SCHEMA_VERSION = 1
ELL = 1.0 / 3.0
ALPHA_MIN = 0.5
STOCHASTIC_TOL = 1e-9
ENTROPY_TOL = 1e-9
OVERRUN_FACTOR = 4


class IterationLimit(HopGameError):
    """The main phase ran past its iteration cap."""


@dataclass(frozen=True)
class LargeClusterFound:
    cluster: tuple[int, ...]
    record: dict


@dataclass(frozen=True)
class Matched:
    record: dict


IterationOutcome = LargeClusterFound | Matched


def _seed(cfg: GameConfig, *salt: int) -> int:
    return int(np.random.SeedSequence([cfg.seed, *salt]).generate_state(1)[0])


def pairwise_cuts(grouping: Grouping) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """One cut per unordered pair of blocks within each group."""
    cuts = []
    for blocks in grouping.groups:
        for a in range(len(blocks)):
            for b in range(a + 1, len(blocks)):
                cuts.append((blocks[a], blocks[b]))
    return cuts


def _group_matchings(grouping: Grouping, batch: MatchingBatch, first_id: int) -> list[GroupMatching]:
    """Partner and edge-id tables per group; kept edges get consecutive ids from ``first_id``."""
    next_id = first_id
    out = []
    ci = 0
    for blocks in grouping.groups:
        k = len(blocks)
        partner = {a: {} for a in range(k)}
        edge_id = {a: {} for a in range(k)}
        for a in range(k):
            for b in range(a + 1, k):
                pa, pb, ia, ib = {}, {}, {}, {}
                for x, y in batch.matchings[ci]:
                    if (ci, x, y) in batch.removed:
                        eid = REMOVED
                    else:
                        eid = next_id
                        next_id += 1
                    pa[x], pb[y] = y, x
                    ia[x], ib[y] = eid, eid
                partner[a][b], partner[b][a] = pa, pb
                edge_id[a][b], edge_id[b][a] = ia, ib
                ci += 1
        out.append(GroupMatching(tuple(blocks), partner, edge_id))
    return out


def _stochastic_error(P: np.ndarray) -> float:
    if P.size == 0:
        return 0.0
    return float(max(np.abs(P.sum(axis=0) - 1).max(), np.abs(P.sum(axis=1) - 1).max()))


def entropy_bound(alpha: float, n: int, ell: float, k: int, load: int) -> float:
    """Guaranteed total entropy gain when an ``alpha`` fraction of commodities is ``ell``-typical."""
    return alpha * n * ((1 - ell) * math.log(k * k / load) - math.log(load * k + 1))


def main_phase_iteration(G: MultiGraph, cfg: GameConfig, player: Player, state: CommodityState,
                         iteration: int = 0, rng: np.random.Generator | None = None
                         ) -> tuple[IterationOutcome, MultiGraph, CommodityState]:
    """One pass of decompose, cover, group, match and walk."""
    n = G.n
    rng = rng if rng is not None else np.random.default_rng(_seed(cfg, 1, iteration))
    params = DecompositionParams(cfg.h, cfg.s, cfg.phi, cfg.kappa)
    report = decompose_with_report(G, params, cfg.decomp_samples, cfg.decomp_adversarial,
                                   seed=_seed(cfg, 2, iteration), backend=cfg.decomp_backend)
    cut = report.cut
    H = cut.apply(G)
    cover = build_cover(H, cfg.h_sep, cfg.h_diam, cfg.load_max)
    cluster, size = largest_cluster(cover)
    k_prime = cfg.effective_k_prime(cover.load, cover.width)
    record: dict = {
        "iteration": iteration,
        "cut": {"size": cut.size, "budget": report.budget, "edges": [list(e) for e in cut.pairs(G)],
                "samples": report.samples, "worst_congestion": report.worst_congestion,
                "heuristic": True, "approximate": report.approximate},
        "cover": {"width": cover.width, "load": cover.load, "max_cluster": size},
        "k_prime": k_prime,
    }
    if size * k_prime >= n:
        record["outcome"] = "large_cluster"
        return LargeClusterFound(cluster, record), G, state

    grouping = decompose(cover, cfg.c, cfg.c_prime, cfg.k, k_prime)
    cuts = pairwise_cuts(grouping)
    record["grouping"] = {"g": grouping.g, "k": grouping.k, "block_size": grouping.block_size,
                          "load": grouping.load, "dropped": len(grouping.dropped),
                          "empty": grouping.empty}
    record["cuts_presented"] = len(cuts)
    ctx = PlayerContext(G, state.P, rng, cfg.removal_fraction)
    batch = player(cuts, ctx) if cuts else MatchingBatch(())
    check_batch(cuts, batch, DegreeViolation, cfg.removal_fraction)

    groups = _group_matchings(grouping, batch, G.m)
    kept = [(a, b) for _, a, b in batch.kept_edges()]
    G_next = G.with_edges(kept)
    step = build_step(n, cfg.k, groups)

    T = state.typical(cut.edges, step.idle)
    typ = measure_typicality(state, cut.edges, step.idle, ELL, T=T)
    loc = locality_violations(T, grouping.groups)
    new_state = commodity_step(state, step, cut.edges)

    h_before = column_entropies(state.P)
    h_after = column_entropies(new_state.P)
    delta = float(h_after.sum() - h_before.sum())
    L = max(int(step.load.max()), 1) if n else 1
    k = cfg.k
    bound = entropy_bound(typ.alpha, n, ELL, k, L)
    per = (1 - typ.leakage) * math.log(k * k / L) - math.log(L * k + 1)
    per_ok = (h_after - h_before) >= per - ENTROPY_TOL
    walk_ok, wmin, wmax = walk_value_bounds(step)
    fan_out, fan_in = fan_counts(step, T)
    stoch = _stochastic_error(new_state.P)
    flags = []
    if typ.alpha < ALPHA_MIN:
        flags.append("typicality_condition_failed")
    if loc:
        flags.append("locality_failed")
    if grouping.empty:
        flags.append("empty_grouping")

    record.update({
        "outcome": "matched",
        "matching": {"edges": batch.edge_count, "withheld": len(batch.removed), "alpha": batch.alpha},
        "entropy_before": float(h_before.sum()),
        "entropy_after": float(h_after.sum()),
        "entropy_delta": delta,
        "min_commodity_delta": float((h_after - h_before).min()) if n else 0.0,
        "typicality": typ.summary(),
        "locality_violations": loc,
        "entropy_bound": {"value": bound, "applicable": loc == 0,
                          "holds": delta >= bound - ENTROPY_TOL * max(n, 1),
                          "per_commodity_violations": int((~per_ok).sum()) if loc == 0 else None},
        "walk_values": {"ok": walk_ok, "min": wmin, "max": wmax},
        "fan_out": fan_out, "fan_out_ok": bool(fan_out >= k * k) if step.weight.size else True,
        "fan_in": fan_in, "fan_in_ok": bool(fan_in <= L * k) if loc == 0 else None,
        "stochastic_error": stoch,
        "flags": flags,
    })
    return Matched(record), G_next, new_state


def final_phase(G: MultiGraph, cluster: Sequence[int], cfg: GameConfig, player: Player,
                rng: np.random.Generator | None = None, P: np.ndarray | None = None
                ) -> tuple[MultiGraph, int]:
    """Match every vertex outside ``cluster`` into it, chunk by chunk."""
    S = sorted(int(v) for v in cluster)
    if not S:
        raise ValueError("cluster must be nonempty")
    inside = set(S)
    rest = [v for v in range(G.n) if v not in inside]
    chunks = [tuple(rest[i:i + len(S)]) for i in range(0, len(rest), len(S))]
    cuts = [(tuple(S[:len(T)]), T) for T in chunks]
    if not cuts:
        return G, 0
    rng = rng if rng is not None else np.random.default_rng(_seed(cfg, 3))
    ctx = PlayerContext(G, P if P is not None else np.eye(G.n), rng, 0.0)
    batch = player(cuts, ctx)
    check_batch(cuts, batch, PlayerRefused, 0.0)
    return G.with_edges([(a, b) for m in batch.matchings for a, b in m]), len(chunks)


def permutation_demand(n: int, rng: np.random.Generator) -> Demand:
    perm = rng.permutation(n)
    return Demand({(v, int(perm[v])): 1.0 for v in range(n) if perm[v] != v})


def bisection_demand(G: MultiGraph, rng: np.random.Generator) -> Demand:
    """Pair the two halves of a BFS-order bisection from a random root, both directions."""
    if G.n < 2:
        return Demand({})
    root = int(rng.integers(G.n))
    d = G.bfs(root).astype(np.float64)
    d[d < 0] = np.inf
    order = sorted(range(G.n), key=lambda v: (d[v], v))
    half = G.n // 2
    left, right = order[:half], order[G.n - half:]
    right = [right[i] for i in rng.permutation(len(right))]
    entries = {}
    for a, b in zip(left, right):
        entries[(a, b)] = 1.0
        entries[(b, a)] = 1.0
    return Demand(entries)


def certify_final(G: MultiGraph, cfg: GameConfig, k2: int, b_used: int, load_bound: int,
                  exact: bool = False) -> dict:
    """Degree, diameter and sampled-routing checks on the final graph.

    Unless ``exact`` is set, a sample whose shortest-path routing already
    meets the congestion bound skips the LP.
    """
    n = G.n
    D = G.distance_matrix
    diameter = int(D.max()) if n and (D >= 0).all() else None
    delta = G.max_degree()
    deg_bound = b_used * load_bound * (cfg.k - 1) + k2
    eta = 4 * max(k2, 1) * math.log(max(n, 2)) / cfg.phi
    rng = np.random.default_rng(_seed(cfg, 4))
    congestions = []
    upper_only = False
    failures = []
    demands = [("permutation", permutation_demand(n, rng)) for _ in range(cfg.final_samples)]
    demands += [("bisection", bisection_demand(G, rng)) for _ in range(cfg.final_samples)]
    for kind, dem in demands:
        if not dem.entries:
            congestions.append(0.0)
            continue
        if exact:
            sol = solve_routing(G, dem, cfg.t, cfg.final_backend)
        else:
            sol = route_within(G, dem, cfg.t, eta, cfg.final_backend)
        if isinstance(sol, Infeasible):
            failures.append(f"{kind}: pair {sol.pair} farther than {cfg.t}")
            congestions.append(math.inf)
        else:
            congestions.append(sol.congestion)
            upper_only |= sol.approximate
    worst = max(congestions, default=0.0)
    return {
        "k_double_prime": k2,
        "max_degree": delta,
        "degree_bound": deg_bound,
        "degree_ok": delta <= deg_bound,
        "diameter": diameter,
        "diameter_ok": diameter is not None and diameter <= cfg.t,
        "sampled_demands": len(demands),
        "sampled_congestion": [c if math.isfinite(c) else None for c in congestions],
        "max_congestion": worst if math.isfinite(worst) else None,
        "eta_bound": eta,
        "congestion_ok": math.isfinite(worst) and worst <= eta,
        "routing_failures": failures,
        "routing_backend": cfg.final_backend,
        "exact_lp": exact,
        # Recorded congestions are upper bounds when a heuristic flow was accepted.
        "approximate": upper_only,
    }


def resolve_player(player: str | Player) -> tuple[str, Player]:
    if callable(player):
        return getattr(player, "__name__", "custom"), player
    if player not in PLAYERS:
        raise ValueError(f"unknown player {player!r}; choose from {sorted(PLAYERS)}")
    return player, PLAYERS[player]


@dataclass
class GameResult:
    G_final: MultiGraph
    transcript: dict
    state: CommodityState = field(repr=False, default=None)


def run_game(cfg: GameConfig, player: str | Player = "random") -> tuple[MultiGraph, dict]:
    result = play(cfg, player)
    return result.G_final, result.transcript


def play(cfg: GameConfig, player: str | Player = "random") -> GameResult:
    """Run both phases; on failure the partial transcript rides on the exception."""
    name, fn = resolve_player(player)
    n = cfg.n
    G = MultiGraph(n)
    state = CommodityState.fresh(n)
    rng = np.random.default_rng(_seed(cfg, 1))
    transcript: dict = {
        "schema_version": SCHEMA_VERSION,
        "player": name,
        "config": cfg.to_json(),
        "iterations": [],
        "final": None,
        "status": "running",
    }
    b_used = 0
    load_bound = 0
    cuts_total = 0
    conditions_held = True
    try:
        iteration = 0
        while True:
            outcome, G, state = main_phase_iteration(G, cfg, fn, state, iteration, rng)
            transcript["iterations"].append(outcome.record)
            if isinstance(outcome, LargeClusterFound):
                cluster = outcome.cluster
                break
            rec = outcome.record
            b_used += 1
            cuts_total += rec["cuts_presented"]
            load_bound = max(load_bound, rec["grouping"]["load"])
            if rec["flags"]:
                conditions_held = False
            cap = cfg.b_max if conditions_held else OVERRUN_FACTOR * cfg.b_max
            if b_used > cap:
                raise IterationLimit(f"main phase reached {b_used} iterations (cap {cap})")
            iteration += 1
        G_final, k2 = final_phase(G, cluster, cfg, fn, rng, state.P)
        final = certify_final(G_final, cfg, k2, b_used, load_bound, cfg.final_exact)
        final.update({
            "cluster_size": len(cluster),
            "r_total": cuts_total + k2,
            "cuts_main_phase": cuts_total,
            "b_used": b_used,
            "b_max": cfg.b_max,
            "iteration_bound_applicable": conditions_held,
            "iteration_bound_ok": b_used <= cfg.b_max,
            "load_bound": load_bound,
        })
        transcript["final"] = final
        transcript["status"] = "complete"
        return GameResult(G_final, transcript, state)
    except HopGameError as exc:
        transcript["status"] = "failed"
        transcript["error"] = f"{type(exc).__name__}: {exc}"
        exc.transcript = transcript
        exc.graph = G
        raise

