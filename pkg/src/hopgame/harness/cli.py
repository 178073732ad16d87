"""Command-line entry point.

Exit codes: 0 success, 1 a check failed, 2 bad usage or input, 3 an
internal invariant broke.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path

from ..clustering import PreconditionViolated, WellSeparatedClustering, build_cover, decompose
from ..decomp import BudgetExhausted, DecompositionParams, decompose_with_report
from ..errors import HopGameError, InvariantViolation
from ..game.config import NAMED_OVERRIDES, DEFAULT_CONSTANTS, InconsistentOverride, derive_config, desk_config
from ..game.engine import play
from ..game.players import PLAYERS
from ..graph.io import FormatError, format_cut, read_graph, write_graph
from .krv import MODES, KRVStrategy, krv_reduce
from .verify import Violation, config_from_json, verify_transcript
from .warmup import run_warmup

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUG = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _color(text: str, code: str, stream) -> str:
    if os.environ.get("NO_COLOR") is not None or not getattr(stream, "isatty", lambda: False)():
        return text
    return f"\033[{code}m{text}\033[0m"


def dumps(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _parse_override(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise UsageError(f"override {item!r} is not KEY=VALUE")
    key, raw = item.split("=", 1)
    if key not in DEFAULT_CONSTANTS and key not in NAMED_OVERRIDES:
        raise UsageError(f"unknown override key {key!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def cmd_run(args) -> int:
    overrides = dict(_parse_override(x) for x in args.override)
    if args.desk:
        cfg = desk_config(args.n, seed=args.seed, **overrides)
    else:
        cfg = derive_config(args.n, args.epsilon, overrides, seed=args.seed)
    try:
        result = play(cfg, args.player)
    except HopGameError as exc:
        transcript = getattr(exc, "transcript", None)
        if transcript is not None:
            _emit(dumps(transcript), args.out)
        raise
    _emit(dumps(result.transcript), args.out)
    if args.graph_out:
        write_graph(result.G_final, args.graph_out)
    final = result.transcript["final"]
    ok = final["degree_ok"] and final["diameter_ok"] and final["congestion_ok"]
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    try:
        transcript = json.loads(Path(args.transcript).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"transcript is not JSON: {exc}") from exc
    G = read_graph(args.graph) if args.graph else None
    problems = verify_transcript(transcript, G)
    if args.replay and not problems:
        cfg = config_from_json(transcript["config"])
        again = play(cfg, transcript["player"]).transcript
        if dumps(again) != dumps(transcript):
            problems.append(Violation("replay", "re-running the recorded config gives a different transcript"))
    for p in problems:
        print(_color("FAIL", "31", sys.stdout), p)
    if not problems:
        print(_color("OK", "32", sys.stdout), "all invariants hold")
    return EXIT_FAIL if problems else EXIT_OK


def cmd_cover(args) -> int:
    G = read_graph(args.graph)
    N = build_cover(G, args.h_sep, args.h_diam, args.load_max if args.load_max is not None else max(G.n, 1))
    _emit(dumps(N.to_json()), args.out)
    return EXIT_OK


def cmd_decompose(args) -> int:
    if args.clustering:
        for name in ("c", "c_prime", "k", "k_prime"):
            if getattr(args, name) is None:
                raise UsageError(f"--{name.replace('_', '-')} is required with --clustering")
        N = WellSeparatedClustering.from_json(json.loads(Path(args.clustering).read_text()))
        grouping = decompose(N, args.c, args.c_prime, args.k, args.k_prime,
                             enforce_cluster_size=not args.skip_cluster_size_check)
        _emit(dumps(grouping.to_json()), args.out)
        return EXIT_OK
    if args.h is None:
        raise UsageError("--h is required with --graph")
    G = read_graph(args.graph)
    params = DecompositionParams(args.h, args.s, args.phi, args.kappa)
    try:
        report = decompose_with_report(G, params, args.samples, args.adversarial, args.seed, args.backend)
    except BudgetExhausted as exc:
        _emit(format_cut(G, exc.removed), args.out)
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _emit(format_cut(G, report.cut.edges), args.out)
    print(f"cut {report.cut.size} of budget {report.budget}; worst sampled congestion "
          f"{report.worst_congestion:.6g} (heuristic)", file=sys.stderr)
    return EXIT_OK


def cmd_krv(args) -> int:
    G = read_graph(args.graph)
    result = krv_reduce(G, args.phi, KRVStrategy(args.rounds), seed=args.seed, mode=args.mode)
    data = result.to_json()
    if data["kind"] == "cut":
        ok = result.sparsity <= args.phi
    else:
        ok = result.recount(G) <= result.congestion_bound
    data["within_bound"] = bool(ok)
    _emit(dumps(data), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_warmup(args) -> int:
    result = run_warmup(args.n, args.k, args.t, args.player, args.seed)
    expected = result.expected_delta
    if args.json:
        _emit(dumps(result.to_json()), None)
    else:
        print(f"n = {args.n}, k = {args.k}, n ln k = {expected:.12f}")
        for it in result.iterations:
            print(f"iteration {it.iteration}: H {it.entropy_before:.12f} -> {it.entropy_after:.12f}, "
                  f"delta {it.delta:.12f} ({it.delta - expected:+.3e} from n ln k)")
        state = "terminated" if result.terminated else "not terminated"
        print(f"{state} after {len(result.iterations)} iterations; max degree {result.max_degree}")
    return EXIT_OK if result.terminated else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hopgame", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="play the cut-matching game and write a transcript")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--player", choices=sorted(PLAYERS), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="replace a constant (21, 36, 216, 324) or a derived parameter")
    p.add_argument("--desk", action="store_true", help="start from the small-n parameter set")
    p.add_argument("--out", default=None, help="transcript path (default stdout)")
    p.add_argument("--graph-out", default=None, help="write the final graph here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="re-check a transcript and its final graph")
    p.add_argument("--transcript", required=True)
    p.add_argument("--graph", default=None)
    p.add_argument("--replay", action="store_true", help="also re-run the game and compare")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cover", help="build a well-separated clustering of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--h-sep", type=int, required=True)
    p.add_argument("--h-diam", type=int, required=True)
    p.add_argument("--load-max", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("decompose", help="hop-expander cut of a graph, or grouping of a clustering")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", help="edge-list file; writes the cut file")
    src.add_argument("--clustering", help="clustering JSON; writes the grouping JSON")
    p.add_argument("--h", type=int)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--phi", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--adversarial", type=int, default=8)
    p.add_argument("--backend", default="auto", choices=["auto", "paths", "layered", "mwu"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c", type=float)
    p.add_argument("--c-prime", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--k-prime", type=int)
    p.add_argument("--skip-cluster-size-check", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("krv", help="find a sparse cut or embed an expander by max-flows")
    p.add_argument("--graph", required=True)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--mode", choices=MODES, default="volume")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_krv)

    p = sub.add_parser("warmup", help="entropy increments on the disjoint-block instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=int, default=None, help="iteration cap (default log_k n)")
    p.add_argument("--player", choices=["ideal", *sorted(PLAYERS)], default="ideal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_warmup)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FormatError, InconsistentOverride, PreconditionViolated, ValueError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"internal invariant violated: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUG
    except BrokenPipeError:
        sys.stderr.close()
        return EXIT_OK
    except HopGameError as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except Exception:
        traceback.print_exc()
        return EXIT_BUG


if __name__ == "__main__":
    sys.exit(main())
