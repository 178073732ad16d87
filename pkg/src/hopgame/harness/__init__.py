"""Max-flow tooling, the flow-based sparse-cut reduction, the warm-up instance and the CLI."""

from __future__ import annotations

from .krv import Embedding, KRVStrategy, SparseCut, StrategyExhausted, embedding_congestion, krv_reduce, sparsity
from .maxflow import (
    FlowNetwork,
    FlowResult,
    NetworkError,
    flow_path_decomposition,
    max_flow_integral,
    min_cut_brute_force,
)
from .verify import Violation, verify_transcript
from .warmup import WarmupResult, run_warmup

__all__ = [
    "Embedding", "FlowNetwork", "FlowResult", "KRVStrategy", "NetworkError", "SparseCut",
    "StrategyExhausted", "Violation", "WarmupResult", "embedding_congestion", "flow_path_decomposition",
    "krv_reduce", "max_flow_integral", "min_cut_brute_force", "run_warmup", "sparsity",
    "verify_transcript",
]
