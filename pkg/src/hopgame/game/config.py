"""Parameter derivation for the cut strategy.

Four literal constants drive the asymptotic parameter choices: the block
count factor (21), the iteration bound factor (36), the cut-size divisor
(216) and the clustering fraction divisor (324).  All four can be replaced
for desk-scale runs, and each derived parameter can also be set directly.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field

from ..errors import HopGameError

DEFAULT_CONSTANTS = {"21": 21.0, "36": 36.0, "216": 216.0, "324": 324.0}
NAMED_OVERRIDES = (
    "k", "h_sep", "h_diam", "h", "s", "kappa", "phi", "c", "c_prime", "k_prime", "t", "b_max",
    "load_max", "removal_fraction", "decomp_samples", "decomp_adversarial", "decomp_backend",
    "final_samples", "final_backend", "final_exact",
)
EPS = 1e-9


class InconsistentOverride(HopGameError):
    """Overrides produce parameters that break a required relation."""


class SmallEpsilonWarning(UserWarning):
    """``epsilon`` lies below ``ln ln n / ln n``."""


@dataclass(frozen=True)
class GameConfig:
    n: int
    epsilon: float
    k: int
    h_sep: int
    h_diam: int
    h: int
    s: float
    phi: float
    kappa: float
    c: float
    c_prime: float
    k_prime: int | None  # None: recomputed each iteration from the measured width and load
    t: int
    b_max: int
    load_max: int
    constants: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_CONSTANTS))
    seed: int = 0
    removal_fraction: float = 0.0
    decomp_samples: int = 32
    decomp_adversarial: int = 8
    decomp_backend: str = "auto"
    final_samples: int = 8
    final_backend: str = "layered"
    final_exact: bool = False  # skip the shortest-path shortcut when certifying

    def effective_k_prime(self, load: int, width: int) -> int:
        """``C^2 load w k`` with ``C`` the clustering divisor, unless fixed."""
        if self.k_prime is not None:
            return self.k_prime
        C = self.constants["324"]
        return math.ceil(C * C * load * width * self.k - EPS)

    @property
    def cut_budget_divisor(self) -> float:
        return self.constants["216"]

    def check(self) -> list[str]:
        problems = []
        if self.k < 2:
            problems.append(f"k = {self.k} < 2")
        if self.h_sep < 2 * self.b_max:
            problems.append(f"h_sep = {self.h_sep} < 2 b_max = {2 * self.b_max}")
        if self.h_diam < self.h_sep:
            problems.append(f"h_diam = {self.h_diam} < h_sep = {self.h_sep}")
        if self.h < self.h_diam:
            problems.append(f"h = {self.h} < h_diam = {self.h_diam}")
        if self.t < self.h * self.s + 2 - EPS:
            problems.append(f"t = {self.t} < h s + 2 = {self.h * self.s + 2}")
        if self.s < 1 or self.kappa < 1:
            problems.append("s and kappa must be at least 1")
        if self.phi <= 0:
            problems.append(f"phi = {self.phi} must be positive")
        elif self.phi > self.k / (self.cut_budget_divisor * self.h * self.s * self.kappa) * (1 + EPS):
            problems.append(
                f"phi = {self.phi} > k / ({self.cut_budget_divisor:g} h s kappa)")
        if not (0 < self.c < 1) or not (0 < self.c_prime < 1):
            problems.append("c and c' must lie in (0, 1)")
        if self.b_max < 1:
            problems.append(f"b_max = {self.b_max} < 1")
        if not (0 <= self.removal_fraction < 1):
            problems.append(f"removal fraction {self.removal_fraction} outside [0, 1)")
        return problems

    def to_json(self) -> dict:
        out = asdict(self)
        out["constants"] = dict(sorted(self.constants.items()))
        return out


def derive_config(n: int, epsilon: float, overrides: Mapping[str, object] | None = None,
                  seed: int = 0) -> GameConfig:
    """Fill every parameter from ``n`` and ``epsilon``, then apply overrides.

    Constant overrides use the keys ``"21"``, ``"36"``, ``"216"`` and
    ``"324"``; named overrides replace a derived value outright.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not (0 < epsilon <= 1):
        raise ValueError("epsilon must lie in (0, 1]")
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(DEFAULT_CONSTANTS) - set(NAMED_OVERRIDES)
    if unknown:
        raise InconsistentOverride(f"unknown override keys {sorted(unknown)}")
    if n > 2 and epsilon < math.log(math.log(n)) / math.log(n):
        warnings.warn(f"epsilon = {epsilon} is below ln ln n / ln n for n = {n}", SmallEpsilonWarning,
                      stacklevel=2)
    constants = dict(DEFAULT_CONSTANTS)
    for key in DEFAULT_CONSTANTS:
        if key in overrides:
            constants[key] = float(overrides.pop(key))
    A, B, D, C = constants["21"], constants["36"], constants["216"], constants["324"]

    def pick(name, default):
        return overrides[name] if name in overrides else default

    k = int(pick("k", math.ceil(A * n ** epsilon - EPS)))
    b_max = int(pick("b_max", math.floor(B / epsilon + EPS)))
    h_sep = int(pick("h_sep", math.ceil(2 * B / epsilon - EPS)))
    # Both clustering trade-off parameters are taken equal to epsilon.
    h_diam = int(pick("h_diam", math.ceil(h_sep / (epsilon * epsilon) - EPS)))
    h = int(pick("h", h_diam))
    s = float(pick("s", 1.0))
    kappa = float(pick("kappa", 1.0))
    phi = float(pick("phi", k / (D * h * s * kappa)))
    t = int(pick("t", math.ceil(h * s - EPS) + 2))
    k_prime = pick("k_prime", None)
    cfg = GameConfig(
        n=n, epsilon=epsilon, k=k, h_sep=h_sep, h_diam=h_diam, h=h, s=s, phi=phi, kappa=kappa,
        c=float(pick("c", 1.0 / C)), c_prime=float(pick("c_prime", 0.5)),
        k_prime=None if k_prime is None else int(k_prime), t=t, b_max=b_max,
        load_max=int(pick("load_max", max(n, 1))), constants=constants, seed=int(seed),
        removal_fraction=float(pick("removal_fraction", 0.0)),
        decomp_samples=int(pick("decomp_samples", 32)),
        decomp_adversarial=int(pick("decomp_adversarial", 8)),
        decomp_backend=str(pick("decomp_backend", "auto")),
        final_samples=int(pick("final_samples", 8)),
        final_backend=str(pick("final_backend", "layered")),
        final_exact=bool(pick("final_exact", False)),
    )
    problems = cfg.check()
    if problems:
        raise InconsistentOverride("; ".join(problems))
    return cfg


def desk_config(n: int, seed: int = 0, **extra) -> GameConfig:
    """Small-n parameters that keep every structural relation intact.

    ``k = 4``, ``b_max = 4`` and ``h_sep = 8``; the clustering divisor is 2 so
    that the large-cluster threshold ``n / k'`` stays above one vertex.  With
    ``k = 4`` the per-iteration entropy lower bound is positive at load 1.
    """
    overrides: dict[str, object] = {"21": 1, "36": 2, "216": 4, "324": 2, "k": 4, "h_diam": 10}
    overrides.update(extra)
    return derive_config(n, 0.5, overrides, seed)
