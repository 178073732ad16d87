from __future__ import annotations

from .config import GameConfig, InconsistentOverride, SmallEpsilonWarning, derive_config, desk_config
from .engine import (
    IterationLimit,
    LargeClusterFound,
    Matched,
    final_phase,
    main_phase_iteration,
    play,
    run_game,
)
from .players import (
    PLAYERS,
    MatchingBatch,
    PlayerContext,
    PlayerRefused,
    lazy_player,
    locality_player,
    random_player,
)
from .walk import CommodityState, DegreeViolation, WalkStep, build_step, commodity_step, measure_typicality

__all__ = [
    "CommodityState", "DegreeViolation", "GameConfig", "InconsistentOverride", "IterationLimit",
    "LargeClusterFound", "Matched", "MatchingBatch", "PLAYERS", "PlayerContext", "PlayerRefused",
    "SmallEpsilonWarning", "WalkStep", "build_step", "commodity_step", "derive_config", "desk_config",
    "final_phase", "lazy_player", "locality_player", "main_phase_iteration", "measure_typicality",
    "play", "random_player", "run_game",
]
