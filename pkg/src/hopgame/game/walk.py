"""Commodity random walk over matched blocks, with typical/leaked accounting.

Within group ``j`` every block vertex ``u`` owns the mixer ``W(j, u)``: ``u``
itself together with its partner in each other block of the group, ``k``
vertices in all.  A vertex in ``load(v)`` groups weighs ``load(v) * k``.
Mass at ``v`` is split evenly over the ``load(v) * k`` mixers containing it
and each mixer returns its mass to members in proportion to ``1 / w(v')``.
Vertices in no block keep their mass.

Each iteration is stored as a list of two-step routes ``v -> u -> v'``
together with the edge ids they traverse, so that typical mass can be
recomputed from scratch once later cuts are known.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix

from ..errors import HopGameError
from ..pseudo import entropy_terms

SELF = -1     # route step that stays put
REMOVED = -2  # route step over a matching edge the player withheld
LEAK_TOL = 1e-12


class DegreeViolation(HopGameError):
    """A matching batch does not give every block vertex one partner per other block."""


@dataclass(frozen=True)
class GroupMatching:
    """Pairwise perfect matchings between the ``k`` blocks of one group.

    ``partner[a][b]`` maps each vertex of block ``a`` to its partner in block
    ``b``; ``edge_id[a][b]`` maps it to the id of the edge copy in the game
    graph, or ``REMOVED`` when the player withheld that edge.
    """

    blocks: tuple[tuple[int, ...], ...]
    partner: dict
    edge_id: dict


@dataclass
class WalkStep:
    """One iteration's two-step routes."""

    src: np.ndarray
    mid: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    idle: np.ndarray   # boolean mask of vertices in no block this iteration
    k: int
    load: np.ndarray   # per-vertex number of groups containing it

    @property
    def n(self) -> int:
        return self.idle.size

    def operator(self, bad: frozenset[int] | set[int] = frozenset(), drop_removed: bool = False,
                 keep_idle: bool = True) -> np.ndarray:
        """Column-stochastic transition matrix restricted to allowed routes."""
        ok = np.ones(self.src.size, dtype=bool)
        if bad:
            bad_arr = np.fromiter(bad, dtype=np.int64)
            ok &= ~np.isin(self.e1, bad_arr) & ~np.isin(self.e2, bad_arr)
        if drop_removed:
            ok &= (self.e1 != REMOVED) & (self.e2 != REMOVED)
        n = self.n
        A = coo_matrix((self.weight[ok], (self.dst[ok], self.src[ok])), shape=(n, n)).toarray()
        if keep_idle:
            idx = np.flatnonzero(self.idle)
            A[idx, idx] += 1.0
        return A


def build_step(n: int, k: int, groups: Sequence[GroupMatching]) -> WalkStep:
    load = np.zeros(n, dtype=np.int64)
    for gm in groups:
        for b in gm.blocks:
            load[list(b)] += 1
    gamma = np.zeros(n)
    gamma[load > 0] = 1.0 / (load[load > 0] * k)
    src, mid, dst, weight, e1, e2 = [], [], [], [], [], []
    for gm in groups:
        kk = len(gm.blocks)
        if kk != k:
            raise DegreeViolation(f"group has {kk} blocks, expected {k}")
        for a, block in enumerate(gm.blocks):
            for u in block:
                # Closed neighbourhood of u in this group's matchings.
                nbrs = [u] + [gm.partner[a][b][u] for b in range(k) if b != a]
                ids = [SELF] + [gm.edge_id[a][b][u] for b in range(k) if b != a]
                g_w = gamma[nbrs].sum()
                for v, ev in zip(nbrs, ids):
                    first = 1.0 / (load[v] * k)
                    for vp, evp in zip(nbrs, ids):
                        src.append(v)
                        mid.append(u)
                        dst.append(vp)
                        weight.append(first * gamma[vp] / g_w)
                        e1.append(ev)
                        e2.append(evp)
    return WalkStep(
        src=np.array(src, dtype=np.int64), mid=np.array(mid, dtype=np.int64),
        dst=np.array(dst, dtype=np.int64), weight=np.array(weight, dtype=np.float64),
        e1=np.array(e1, dtype=np.int64), e2=np.array(e2, dtype=np.int64),
        idle=load == 0, k=k, load=load)


def column_entropies(P: np.ndarray) -> np.ndarray:
    return entropy_terms(P).sum(axis=0)


@dataclass
class CommodityState:
    """Commodity matrix ``P`` (column ``nu`` is commodity ``nu``) and its walk history."""

    P: np.ndarray
    steps: list[WalkStep] = field(default_factory=list)
    cuts: list[frozenset[int]] = field(default_factory=list)

    @classmethod
    def fresh(cls, n: int) -> CommodityState:
        return cls(np.eye(n))

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def bad_edges(self) -> frozenset[int]:
        return frozenset().union(*self.cuts) if self.cuts else frozenset()

    def typical(self, extra_cut: Iterable[int] = (), idle_now: np.ndarray | None = None,
                causes: tuple[str, ...] = ("cut", "idle", "removed")) -> np.ndarray:
        """Typical part of ``P`` before the next step.

        Mass is typical while its route history avoids every cut edge so far
        (including ``extra_cut``), never sat on an idle vertex at the start
        of a step, and never used a withheld edge.  ``causes`` selects which
        of the three conditions to apply, for per-cause leakage.
        """
        bad = (self.bad_edges() | frozenset(extra_cut)) if "cut" in causes else frozenset()
        T = np.eye(self.n)
        for step in self.steps:
            if "idle" in causes:
                T[step.idle, :] = 0.0
            T = step.operator(bad, drop_removed="removed" in causes, keep_idle="idle" not in causes) @ T
        if idle_now is not None and "idle" in causes:
            T[idle_now, :] = 0.0
        return T

    def leakage(self, T: np.ndarray) -> np.ndarray:
        return np.clip(self.P.sum(axis=0) - T.sum(axis=0), 0.0, None)


def commodity_step(state: CommodityState, step: WalkStep, cut: Iterable[int] = ()) -> CommodityState:
    """Advance every commodity by one iteration; ``cut`` joins the cut history."""
    A = step.operator()
    P = A @ state.P
    return CommodityState(P, state.steps + [step], state.cuts + [frozenset(cut)])


@dataclass(frozen=True)
class TypicalityStats:
    alpha: float            # fraction of commodities with leakage at most ``ell``
    ell: float
    leakage: np.ndarray     # per commodity
    by_cause: dict          # cause -> per-commodity leakage when only that cause applies

    def summary(self) -> dict:
        def stats(x):
            return {"mean": float(x.mean()) if x.size else 0.0, "max": float(x.max()) if x.size else 0.0}
        return {
            "alpha": self.alpha,
            "ell": self.ell,
            "leakage": stats(self.leakage),
            "by_cause": {c: stats(v) for c, v in sorted(self.by_cause.items())},
        }


def measure_typicality(state: CommodityState, extra_cut: Iterable[int] = (),
                       idle_now: np.ndarray | None = None, ell: float = 1.0 / 3.0,
                       T: np.ndarray | None = None) -> TypicalityStats:
    extra_cut = frozenset(extra_cut)
    if T is None:
        T = state.typical(extra_cut, idle_now)
    leak = state.leakage(T)
    alpha = float(np.mean(leak <= ell + LEAK_TOL)) if leak.size else 1.0
    by_cause = {c: state.leakage(state.typical(extra_cut, idle_now, (c,)))
                for c in ("cut", "idle", "removed")}
    return TypicalityStats(alpha, ell, leak, by_cause)


def locality_violations(T: np.ndarray, groups: Sequence[Sequence[Sequence[int]]],
                        tol: float = LEAK_TOL) -> int:
    """Count (group, commodity) pairs whose typical mass in the group spans several blocks."""
    count = 0
    for blocks in groups:
        masses = np.stack([T[list(b), :].sum(axis=0) for b in blocks])
        count += int(((masses > tol).sum(axis=0) > 1).sum())
    return count


def walk_value_bounds(step: WalkStep) -> tuple[bool, float, float]:
    """Check every route weight lies in ``[1/(k^2 L^2), L/k^2]`` with ``L`` the max load."""
    if step.weight.size == 0:
        return True, math.nan, math.nan
    L = int(step.load.max())
    k = step.k
    lo, hi = 1.0 / (k * k * L * L), L / (k * k)
    ok = bool((step.weight >= lo * (1 - 1e-12)).all() and (step.weight <= hi * (1 + 1e-12)).all())
    return ok, float(step.weight.min()), float(step.weight.max())


def fan_counts(step: WalkStep, T: np.ndarray) -> tuple[int, int]:
    """Smallest route fan-out over active vertices, largest typical fan-in over all commodities."""
    n = step.n
    active = ~step.idle
    out_counts = np.bincount(step.src, minlength=n)
    fan_out = int(out_counts[active].min()) if active.any() else 0
    fan_in = 0
    carries = T[step.src, :] > LEAK_TOL
    for nu in range(T.shape[1]):
        sel = carries[:, nu]
        if sel.any():
            fan_in = max(fan_in, int(np.bincount(step.dst[sel], minlength=n).max()))
    return fan_out, fan_in
