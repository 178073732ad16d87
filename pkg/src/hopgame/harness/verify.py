"""Re-check a game transcript, and optionally its final graph, offline."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..game.config import GameConfig
from ..game.engine import SCHEMA_VERSION
from ..graph.multigraph import MultiGraph

TOL = 1e-9
ENTROPY_SLACK = 1e-6


@dataclass(frozen=True)
class Violation:
    invariant: str
    detail: str

    def __str__(self) -> str:
        return f"{self.invariant}: {self.detail}"


def config_from_json(data: dict) -> GameConfig:
    data = dict(data)
    data["constants"] = {str(k): float(v) for k, v in data.get("constants", {}).items()}
    return GameConfig(**data)


def verify_transcript(transcript: dict, G: MultiGraph | None = None) -> list[Violation]:
    """Every invariant the transcript (and graph, when given) fails, in a fixed order."""
    out: list[Violation] = []

    def fail(name: str, detail: str) -> None:
        out.append(Violation(name, detail))

    if transcript.get("schema_version") != SCHEMA_VERSION:
        fail("schema_version", f"expected {SCHEMA_VERSION}, found {transcript.get('schema_version')!r}")
        return out
    try:
        cfg = config_from_json(transcript["config"])
    except (KeyError, TypeError) as exc:
        fail("config", f"unreadable config: {exc}")
        return out
    for problem in cfg.check():
        fail("config_relations", problem)
    if transcript.get("status") != "complete":
        fail("status", f"run did not complete: {transcript.get('error', transcript.get('status'))}")
    n = cfg.n
    ceiling = n * math.log(n) if n > 1 else 0.0

    matched = [it for it in transcript.get("iterations", []) if it.get("outcome") == "matched"]
    for pos, it in enumerate(matched):
        i = it["iteration"]
        if it["stochastic_error"] > TOL:
            fail("double_stochasticity", f"iteration {i}: row/column error {it['stochastic_error']:.3g}")
        if abs(it["entropy_after"] - it["entropy_before"] - it["entropy_delta"]) > ENTROPY_SLACK:
            fail("entropy_record", f"iteration {i}: delta does not equal after - before")
        if it["min_commodity_delta"] < -ENTROPY_SLACK:
            fail("stable_entropy", f"iteration {i}: a commodity lost {-it['min_commodity_delta']:.3g} entropy")
        if it["entropy_after"] > ceiling + ENTROPY_SLACK:
            fail("entropy_ceiling", f"iteration {i}: H = {it['entropy_after']:.6g} > n ln n = {ceiling:.6g}")
        eb = it["entropy_bound"]
        if eb["applicable"] and it["entropy_delta"] < eb["value"] - ENTROPY_SLACK * max(n, 1):
            fail("entropy_lower_bound", f"iteration {i}: gain {it['entropy_delta']:.6g} < {eb['value']:.6g}")
        if cfg.h_sep >= 2 * (pos + 1) and it["locality_violations"]:
            fail("typical_locality", f"iteration {i}: {it['locality_violations']} commodities span blocks")
        if not it["walk_values"]["ok"]:
            fail("walk_value_bounds", f"iteration {i}: route weights outside the allowed range")
        if not it["fan_out_ok"]:
            fail("split_fan_out", f"iteration {i}: fan-out {it['fan_out']} < k^2")
        if it["fan_in_ok"] is False:
            fail("merge_fan_in", f"iteration {i}: fan-in {it['fan_in']} too large")
        if it["cut"]["size"] > it["cut"]["budget"]:
            fail("cut_budget", f"iteration {i}: cut of {it['cut']['size']} exceeds {it['cut']['budget']}")

    final = transcript.get("final")
    if final is None:
        return out
    if final["b_used"] != len(matched):
        fail("b_used_record", f"b_used = {final['b_used']} but {len(matched)} matched iterations")
    if final["iteration_bound_applicable"] and final["b_used"] > cfg.b_max:
        fail("iteration_bound", f"b_used = {final['b_used']} > b_max = {cfg.b_max}")
    k2 = final["k_double_prime"]
    expected = final["b_used"] * final["load_bound"] * (cfg.k - 1) + k2
    if final["degree_bound"] != expected:
        fail("degree_bound", f"recorded bound {final['degree_bound']} != b load (k - 1) + k'' = {expected}")
    if final["max_degree"] > expected:
        fail("degree_bound", f"max degree {final['max_degree']} > {expected}")
    if final["diameter"] is None or final["diameter"] > cfg.t:
        fail("diameter", f"diameter {final['diameter']} exceeds t = {cfg.t}")
    last = transcript["iterations"][-1] if transcript.get("iterations") else None
    if last is not None and k2 > last["k_prime"]:
        fail("k_double_prime", f"k'' = {k2} > k' = {last['k_prime']}")
    worst = final["max_congestion"]
    if worst is None or worst > final["eta_bound"] + TOL:
        fail("congestion", f"sampled congestion {worst} exceeds {final['eta_bound']:.6g}")
    if final["routing_failures"]:
        fail("routing", "; ".join(final["routing_failures"]))

    if G is not None:
        if G.n != n:
            fail("graph_size", f"graph has {G.n} vertices, config says {n}")
            return out
        if G.max_degree() != final["max_degree"]:
            fail("degree_record", f"graph max degree {G.max_degree()} != recorded {final['max_degree']}")
        D = G.distance_matrix
        diameter = int(D.max()) if n and (D >= 0).all() else None
        if diameter != final["diameter"]:
            fail("diameter_record", f"graph diameter {diameter} != recorded {final['diameter']}")
    return out
