"""Whitespace-delimited text formats for graphs, demands and cuts.

Graph files start with ``n m`` followed by ``m`` lines ``u v``.  Demand files
hold lines ``u v value``; cut files hold lines ``u v`` naming removed edge
copies.  ``#`` starts a comment anywhere on a line.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable
from pathlib import Path

from ..errors import HopGameError
from .flows import Demand
from .multigraph import MultiGraph, edge_key


class FormatError(HopGameError):
    """Malformed graph, demand or cut file."""


def _rows(text: str) -> list[tuple[int, list[str]]]:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].split()
        if body:
            rows.append((lineno, body))
    return rows


def _ints(lineno: int, fields: list[str], count: int) -> list[int]:
    if len(fields) != count:
        raise FormatError(f"line {lineno}: expected {count} fields, got {len(fields)}")
    try:
        return [int(f) for f in fields]
    except ValueError as exc:
        raise FormatError(f"line {lineno}: {exc}") from None


def parse_graph(text: str) -> MultiGraph:
    rows = _rows(text)
    if not rows:
        raise FormatError("missing header line 'n m'")
    lineno, head = rows[0]
    n, m = _ints(lineno, head, 2)
    body = rows[1:]
    if len(body) != m:
        raise FormatError(f"header declares {m} edges but {len(body)} edge lines follow")
    edges = [tuple(_ints(ln, f, 2)) for ln, f in body]
    try:
        return MultiGraph(n, edges)
    except HopGameError as exc:
        raise FormatError(str(exc)) from None


def format_graph(G: MultiGraph) -> str:
    lines = [f"{G.n} {G.m}"] + [f"{u} {v}" for u, v in G.edges]
    return "\n".join(lines) + "\n"


def parse_demand(text: str) -> Demand:
    entries: dict[tuple[int, int], float] = {}
    for lineno, f in _rows(text):
        if len(f) != 3:
            raise FormatError(f"line {lineno}: expected 'u v value'")
        u, v = _ints(lineno, f[:2], 2)
        try:
            val = float(f[2])
        except ValueError:
            raise FormatError(f"line {lineno}: bad value {f[2]!r}") from None
        entries[(u, v)] = entries.get((u, v), 0.0) + val
    try:
        return Demand(entries)
    except HopGameError as exc:
        raise FormatError(str(exc)) from None


def format_demand(D: Demand) -> str:
    return "".join(f"{u} {v} {val!r}\n" for (u, v), val in D.entries.items())


def parse_cut(text: str, G: MultiGraph) -> list[int]:
    """Edge ids of ``G`` named by a cut file, honouring multiplicity."""
    want = Counter(edge_key(*_ints(ln, f, 2)) for ln, f in _rows(text))
    ids = []
    for i, e in enumerate(G.edges):
        if want[e] > 0:
            ids.append(i)
            want[e] -= 1
    missing = {e: c for e, c in want.items() if c > 0}
    if missing:
        raise FormatError(f"cut names edges not in the graph: {sorted(missing)[:5]}")
    return ids


def format_cut(G: MultiGraph, edge_ids: Iterable[int]) -> str:
    return "".join(f"{G.edges[i][0]} {G.edges[i][1]}\n" for i in sorted(edge_ids))


def read_graph(path: str | Path) -> MultiGraph:
    return parse_graph(Path(path).read_text())


def write_graph(G: MultiGraph, path: str | Path) -> None:
    Path(path).write_text(format_graph(G))


def read_demand(path: str | Path) -> Demand:
    return parse_demand(Path(path).read_text())
