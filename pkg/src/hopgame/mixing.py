"""Two-step mixing processes over weighted mixers.

Mass at each vertex is first split uniformly among the mixers containing it,
then every mixer hands its mass back to its members in proportion to
``1 / w(v)``.  Both steps preserve total mass and never decrease entropy.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import HopGameError
from .pseudo import PseudoDistribution


class MixerSystemError(HopGameError):
    """Malformed mixer collection or weights."""


class UncoveredVertex(HopGameError):
    """A vertex carrying mass belongs to no mixer."""


@dataclass(frozen=True)
class MixerSystem:
    vertices: tuple
    mixers: tuple
    weights: Mapping[Hashable, int]

    def __init__(self, vertices: Iterable[Hashable], mixers: Iterable[Iterable[Hashable]],
                 weights: Mapping[Hashable, int] | None = None):
        verts = tuple(vertices)
        mix = tuple(tuple(sorted(set(m))) for m in mixers)
        counts = Counter(v for m in mix for v in m)
        vset = set(verts)
        for m in mix:
            if not m:
                raise MixerSystemError("empty mixer")
            if not set(m) <= vset:
                raise MixerSystemError(f"mixer {m} has vertices outside the vertex set")
        if weights is None:
            weights = {v: counts.get(v, 0) for v in verts}
        else:
            weights = {v: int(weights.get(v, 0)) for v in verts}
            for v in verts:
                if weights[v] != counts.get(v, 0):
                    raise MixerSystemError(
                        f"vertex {v!r} has weight {weights[v]} but lies in "
                        f"{counts.get(v, 0)} mixers")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "mixers", mix)
        object.__setattr__(self, "weights", weights)

    @property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    def gamma(self) -> np.ndarray:
        """Per-vertex ``1 / w(v)``; zero for vertices in no mixer."""
        w = np.array([self.weights[v] for v in self.vertices], dtype=np.float64)
        out = np.zeros_like(w)
        out[w > 0] = 1.0 / w[w > 0]
        return out

    def incidence(self) -> np.ndarray:
        """Mixer-by-vertex 0/1 matrix (one row per mixer, repeats kept)."""
        idx = self.index
        inc = np.zeros((len(self.mixers), len(self.vertices)))
        for r, m in enumerate(self.mixers):
            inc[r, [idx[v] for v in m]] = 1.0
        return inc

    def operator(self) -> np.ndarray:
        """Column-stochastic matrix ``A`` with ``p' = A p`` on covered vertices.

        Vertices in no mixer map to zero; callers that need them to keep
        their mass should add singleton mixers.
        """
        inc = self.incidence()
        g = self.gamma()
        gamma_w = inc @ g
        first = inc * g[None, :]                       # q = first @ p
        second = (inc * g[None, :]).T / gamma_w[None, :]  # p' = second @ q
        return second @ first


def _as_vector(p: PseudoDistribution | Sequence[float], sys: MixerSystem) -> np.ndarray:
    if isinstance(p, PseudoDistribution):
        idx = sys.index
        extra = [v for v in p.support if v not in idx and p[v] > 0]
        if extra:
            raise UncoveredVertex(f"mass on vertices outside the system: {extra[:5]}")
        return np.array([p[v] for v in sys.vertices], dtype=np.float64)
    return np.asarray(p, dtype=np.float64)


def _check_covered(x: np.ndarray, sys: MixerSystem) -> None:
    g = sys.gamma()
    bad = np.flatnonzero((x > 0) & (g == 0))
    if bad.size:
        raise UncoveredVertex(
            f"vertices {[sys.vertices[i] for i in bad[:5]]} carry mass but have w(v) = 0")


def _clean(values: np.ndarray) -> np.ndarray:
    # Float noise only; genuine overflow past 1 is left for validation to reject.
    out = np.where(values < 0, 0.0, values)
    return np.where((out > 1.0) & (out <= 1.0 + 1e-12), 1.0, out)


def intermediate(p: PseudoDistribution | Sequence[float], sys: MixerSystem) -> PseudoDistribution:
    """Mass held by each mixer after the splitting step, keyed by mixer position."""
    x = _as_vector(p, sys)
    _check_covered(x, sys)
    q = sys.incidence() @ (sys.gamma() * x)
    return PseudoDistribution({r: float(v) for r, v in enumerate(_clean(q))})


def mix(p: PseudoDistribution | Sequence[float], sys: MixerSystem) -> PseudoDistribution:
    """One round of the two-step mixing process."""
    x = _as_vector(p, sys)
    _check_covered(x, sys)
    inc = sys.incidence()
    g = sys.gamma()
    q = inc @ (g * x)
    gamma_w = inc @ g
    out = g * (inc.T @ (q / gamma_w))
    return PseudoDistribution({v: float(val) for v, val in zip(sys.vertices, _clean(out))})
