"""The idealized disjoint-block instance.

Vertices are the numbers ``0..k^m - 1`` written with ``m`` base-``k`` digits.
Iteration ``i`` splits them into ``k`` blocks by digit ``i`` and plays all
pairwise cuts between blocks.  The ideal answer matches ``u`` with the vertex
that differs from ``u`` only in digit ``i``; then rows of ``P`` in distinct
blocks have disjoint supports and each iteration adds exactly ``n ln k`` to
the total entropy.  Every commodity is uniform after ``m`` iterations.

Any player from the game may be substituted for the ideal answer.  The walk
is lazy: a commodity stays with probability ``1/k`` and moves to each of its
``k - 1`` new neighbours with probability ``1/k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..game.players import PLAYERS, MatchingBatch, Player, PlayerContext, check_batch
from ..graph.multigraph import MultiGraph
from ..pseudo import array_entropy

UNIFORM_TOL = 1e-9


def exact_power(n: int, k: int) -> int | None:
    """``m`` with ``k^m = n``, or ``None``."""
    if k < 2 or n < 1:
        return None
    m, x = 0, 1
    while x < n:
        x *= k
        m += 1
    return m if x == n else None


def digit_blocks(n: int, k: int, i: int) -> list[list[int]]:
    place = k ** i
    return [[v for v in range(n) if (v // place) % k == j] for j in range(k)]


def ideal_player(k: int, i: int):
    """Match ``u`` to the vertex that differs only in digit ``i``."""
    place = k ** i

    def answer(cuts, ctx: PlayerContext) -> MatchingBatch:
        out = []
        for A, B in cuts:
            target = (B[0] // place) % k
            out.append(tuple((a, a + (target - (a // place) % k) * place) for a in A))
        return MatchingBatch(tuple(out))

    return answer


@dataclass(frozen=True)
class WarmupIteration:
    iteration: int
    entropy_before: float
    entropy_after: float
    cuts: int

    @property
    def delta(self) -> float:
        return self.entropy_after - self.entropy_before

    def to_json(self) -> dict:
        return {"iteration": self.iteration, "entropy_before": self.entropy_before,
                "entropy_after": self.entropy_after, "entropy_delta": self.delta, "cuts": self.cuts}


@dataclass(frozen=True)
class WarmupResult:
    n: int
    k: int
    iterations: tuple[WarmupIteration, ...]
    terminated: bool         # every commodity uniform
    max_degree: int
    P: np.ndarray

    @property
    def expected_delta(self) -> float:
        return self.n * math.log(self.k)

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "expected_delta": self.expected_delta,
                "iterations": [it.to_json() for it in self.iterations],
                "terminated": self.terminated, "max_degree": self.max_degree}


def _lazy_step(P: np.ndarray, k: int, batch: MatchingBatch) -> np.ndarray:
    A = np.eye(P.shape[0]) / k
    for m in batch.matchings:
        for a, b in m:
            A[a, b] += 1.0 / k
            A[b, a] += 1.0 / k
    return A @ P


def run_warmup(n: int, k: int, t: int | None = None, player: str | Player = "ideal",
               seed: int = 0) -> WarmupResult:
    """Play up to ``t`` iterations (default ``log_k n``) and record entropy per iteration."""
    m = exact_power(n, k)
    if m is None:
        raise ValueError(f"n = {n} is not a power of k = {k}")
    limit = m if t is None else t
    rng = np.random.default_rng(seed)
    P = np.eye(n)
    edges: list[tuple[int, int]] = []
    rows = []
    H = array_entropy(P)
    done = False
    for i in range(limit):
        if np.abs(P - 1.0 / n).max() <= UNIFORM_TOL:
            done = True
            break
        blocks = digit_blocks(n, k, i % m)
        cuts = [(tuple(blocks[a]), tuple(blocks[b])) for a in range(k) for b in range(a + 1, k)]
        if player == "ideal":
            answer = ideal_player(k, i % m)
        else:
            answer = PLAYERS[player] if isinstance(player, str) else player
        ctx = PlayerContext(MultiGraph(n, edges), P, rng)
        batch = answer(cuts, ctx)
        check_batch(cuts, batch)
        edges.extend(e for mt in batch.matchings for e in mt)
        P = _lazy_step(P, k, batch)
        H_next = array_entropy(P)
        rows.append(WarmupIteration(i, H, H_next, len(cuts)))
        H = H_next
    done = done or bool(np.abs(P - 1.0 / n).max() <= UNIFORM_TOL)
    return WarmupResult(n, k, tuple(rows), done, MultiGraph(n, edges).max_degree(), P)
