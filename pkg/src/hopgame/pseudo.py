"""Pseudo-distributions and the entropy effects of splitting and merging.

A pseudo-distribution is a vector with entries in ``[0, 1]`` that need not
sum to one.  Entropy uses the natural logarithm with ``H(0) = 0``.
"""

from __future__ import annotations

import math
from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import HopGameError

SUM_TOL = 1e-12
INEQ_TOL = 1e-9


class PseudoDistributionError(HopGameError):
    """Entries outside ``[0, 1]`` or an inconsistent cached size."""


class InconsistentPlan(HopGameError):
    """A split plan whose parts do not add up to the source entries."""


class OverflowedEntry(HopGameError):
    """Merging produced an entry larger than one."""


class InvalidPartition(HopGameError):
    """Merge groups overlap or fail to cover the support."""


def entropy_terms(x: np.ndarray) -> np.ndarray:
    """Elementwise ``-u log u`` with the convention ``0 log 0 = 0``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = -x[pos] * np.log(x[pos])
    return out


def array_entropy(x: np.ndarray) -> float:
    """Sum of ``-u log u`` over every entry of an array of any shape."""
    return float(entropy_terms(x).sum())


@dataclass(frozen=True)
class PseudoDistribution:
    values: Mapping[Hashable, float]
    size: float = field(default=-1.0)

    def __post_init__(self):
        vals = dict(self.values)
        for key, v in vals.items():
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise PseudoDistributionError(f"entry {key!r} = {v} outside [0, 1]")
        total = math.fsum(vals.values())
        if self.size < 0:
            object.__setattr__(self, "size", total)
        elif abs(self.size - total) > SUM_TOL:
            raise PseudoDistributionError(
                f"cached size {self.size} differs from sum {total}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_sequence(cls, seq: Iterable[float]) -> PseudoDistribution:
        return cls({i: float(v) for i, v in enumerate(seq)})

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, key: Hashable) -> float:
        return self.values.get(key, 0.0)

    @property
    def support(self) -> list[Hashable]:
        return list(self.values)

    def as_array(self) -> np.ndarray:
        return np.fromiter(self.values.values(), dtype=np.float64, count=len(self.values))

    def mass(self, subset: Iterable[Hashable]) -> float:
        """Total mass on ``subset``; keys outside the support count as zero."""
        return math.fsum(self.values.get(i, 0.0) for i in subset)


def entropy(p: PseudoDistribution) -> float:
    return math.fsum(-v * math.log(v) for v in p.values.values() if v > 0)


@dataclass(frozen=True)
class SplitPlan:
    """For each source index, the list of parts it is split into."""

    parts: Mapping[Hashable, Sequence[float]]

    def max_fanout(self) -> int:
        return max((len(v) for v in self.parts.values()), default=0)

    def min_split_factor(self, p: PseudoDistribution) -> float:
        """Largest ``gamma`` such that every part is at most ``p(i) / gamma``."""
        gamma = math.inf
        for i, parts in self.parts.items():
            src = p[i]
            for q in parts:
                if q > 0:
                    gamma = min(gamma, src / q)
        return gamma


def split(p: PseudoDistribution, plan: SplitPlan) -> PseudoDistribution:
    """Split entry ``i`` of ``p`` into the parts listed in ``plan``.

    The result is keyed by ``(i, j)`` for the ``j``-th part of source ``i``.
    Entries of ``p`` missing from the plan are kept whole as ``(i, 0)``.
    """
    for i in plan.parts:
        if i not in p.values:
            raise InconsistentPlan(f"plan references index {i!r} outside the support")
    out: dict[Hashable, float] = {}
    for i, v in p.values.items():
        parts = plan.parts.get(i, (v,))
        if any(q < 0 for q in parts):
            raise InconsistentPlan(f"negative part for index {i!r}")
        if abs(math.fsum(parts) - v) > SUM_TOL:
            raise InconsistentPlan(
                f"parts of {i!r} sum to {math.fsum(parts)}, expected {v}")
        for j, q in enumerate(parts):
            out[(i, j)] = float(q)
    return PseudoDistribution(out)


@dataclass(frozen=True)
class MergePartition:
    groups: Sequence[frozenset]

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(frozenset(g) for g in self.groups))
        seen: set = set()
        for g in self.groups:
            if seen & g:
                raise InvalidPartition("merge groups overlap")
            seen |= g

    @property
    def factor(self) -> int:
        """Merging factor: size of the largest group."""
        return max((len(g) for g in self.groups), default=0)

    @classmethod
    def inverse_of(cls, plan: SplitPlan, p: PseudoDistribution) -> MergePartition:
        """The partition that undoes ``split(p, plan)``."""
        groups = []
        for i, v in p.values.items():
            n_parts = len(plan.parts.get(i, (v,)))
            groups.append(frozenset((i, j) for j in range(n_parts)))
        return cls(groups)


def merge(q: PseudoDistribution, partition: MergePartition) -> PseudoDistribution:
    """Merge the entries of ``q`` group by group; group ``i`` becomes entry ``i``."""
    covered = set().union(*partition.groups) if partition.groups else set()
    missing = set(q.values) - covered
    if missing:
        raise InvalidPartition(f"{len(missing)} support indices not covered by the partition")
    out = {}
    for i, g in enumerate(partition.groups):
        v = math.fsum(q[j] for j in g)
        if v > 1.0 + SUM_TOL:
            raise OverflowedEntry(f"group {i} merges to {v} > 1")
        out[i] = min(v, 1.0)
    return PseudoDistribution(out)
