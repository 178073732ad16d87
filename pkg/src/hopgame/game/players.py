"""Concrete matching players.

A player receives a list of cuts ``(A, B)`` with ``|A| = |B|`` and returns
one perfect matching per cut.  It may withhold a fraction of the matched
edges when the game allows partial matchings.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import HopGameError
from ..graph.multigraph import MultiGraph
from ..pseudo import entropy_terms

Cut = tuple[tuple[int, ...], tuple[int, ...]]


class PlayerRefused(HopGameError):
    """A player answered a cut with something other than a perfect matching."""


@dataclass(frozen=True)
class MatchingBatch:
    """Perfect matchings per cut, plus the edges the player withheld.

    ``matchings[i]`` pairs ``A`` with ``B`` for cut ``i`` as a tuple of
    ``(a, b)`` with ``a`` in ``A``.  ``removed`` lists ``(i, a, b)`` entries of
    withheld edges; ``alpha`` is the fraction withheld.
    """

    matchings: tuple[tuple[tuple[int, int], ...], ...]
    removed: frozenset[tuple[int, int, int]] = frozenset()

    @property
    def edge_count(self) -> int:
        return sum(len(m) for m in self.matchings)

    @property
    def alpha(self) -> float:
        total = self.edge_count
        return len(self.removed) / total if total else 0.0

    def kept_edges(self) -> list[tuple[int, int, int]]:
        return [(i, a, b) for i, m in enumerate(self.matchings) for a, b in m
                if (i, a, b) not in self.removed]


def check_batch(cuts: Sequence[Cut], batch: MatchingBatch, error: type[HopGameError] = PlayerRefused,
                max_alpha: float = 0.0) -> None:
    """Raise ``error`` unless every cut got a perfect matching across it."""
    if len(batch.matchings) != len(cuts):
        raise error(f"{len(batch.matchings)} matchings for {len(cuts)} cuts")
    for i, ((A, B), m) in enumerate(zip(cuts, batch.matchings)):
        left = [a for a, _ in m]
        right = [b for _, b in m]
        if sorted(left) != sorted(A) or sorted(right) != sorted(B):
            raise error(f"cut {i}: matching is not perfect between its two sides")
    listed = {(i, a, b) for i, m in enumerate(batch.matchings) for a, b in m}
    if not batch.removed <= listed:
        raise error("withheld edges are not part of the matchings")
    if batch.alpha > max_alpha + 1e-12:
        raise error(f"player withheld a {batch.alpha:.3f} fraction, more than {max_alpha}")


@dataclass
class PlayerContext:
    G: MultiGraph
    P: np.ndarray
    rng: np.random.Generator
    removal_fraction: float = 0.0
    extra: dict = field(default_factory=dict)


Player = Callable[[Sequence[Cut], PlayerContext], MatchingBatch]


def _withhold(matchings: list[tuple[tuple[int, int], ...]], ctx: PlayerContext) -> frozenset:
    edges = [(i, a, b) for i, m in enumerate(matchings) for a, b in m]
    count = math.floor(ctx.removal_fraction * len(edges))
    if count <= 0:
        return frozenset()
    pick = ctx.rng.choice(len(edges), size=count, replace=False)
    return frozenset(edges[j] for j in sorted(pick))


def _assign(A: Sequence[int], B: Sequence[int], cost: np.ndarray) -> tuple[tuple[int, int], ...]:
    rows, cols = linear_sum_assignment(cost)
    return tuple((int(A[r]), int(B[c])) for r, c in zip(rows, cols))


def random_player(cuts: Sequence[Cut], ctx: PlayerContext) -> MatchingBatch:
    """Uniformly random perfect matching per cut, from the seeded generator."""
    out = []
    for A, B in cuts:
        perm = ctx.rng.permutation(len(B))
        out.append(tuple((int(a), int(B[p])) for a, p in zip(A, perm)))
    return MatchingBatch(tuple(out), _withhold(out, ctx))


def locality_player(cuts: Sequence[Cut], ctx: PlayerContext) -> MatchingBatch:
    """Minimum total hop distance in the current graph; unreachable pairs cost ``2n``."""
    D = ctx.G.distance_matrix.astype(np.float64)
    D[D < 0] = 2 * max(ctx.G.n, 1)
    out = [_assign(A, B, D[np.ix_(A, B)]) for A, B in cuts]
    return MatchingBatch(tuple(out), _withhold(out, ctx))


def _merge_gain(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Entropy gained by averaging row ``x`` of ``X`` with row ``y`` of ``Y``, for all pairs."""
    hx = entropy_terms(X).sum(axis=1)
    hy = entropy_terms(Y).sum(axis=1)
    mid = entropy_terms((X[:, None, :] + Y[None, :, :]) / 2).sum(axis=2)
    return mid - (hx[:, None] + hy[None, :]) / 2


def lazy_player(cuts: Sequence[Cut], ctx: PlayerContext) -> MatchingBatch:
    """Pair vertices whose commodity mixes are already alike.

    Row ``u`` of ``P`` says which commodities sit at ``u``.  The cost of a
    pair is the entropy gained by averaging the two rows, so the assignment
    keeps the next walk step's gain small.  Columns are shuffled first so
    that ties are broken by the seeded generator.
    """
    out = []
    for A, B in cuts:
        perm = ctx.rng.permutation(len(B))
        Bp = [B[p] for p in perm]
        cost = _merge_gain(ctx.P[list(A), :], ctx.P[Bp, :])
        out.append(_assign(A, Bp, cost))
    return MatchingBatch(tuple(out), _withhold(out, ctx))


PLAYERS: dict[str, Player] = {
    "random": random_player,
    "lazy": lazy_player,
    "locality": locality_player,
}
