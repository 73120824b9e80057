"""Mixed graphs: parsing, validation, topological relabeling, serialization.

Nodes are the integers ``1..n``.  Directed edges ``(i, j)`` mean ``i -> j``;
bidirected edges are stored as ordered pairs ``(i, j)`` with ``i < j``.

Two input formats are accepted.  The line DSL::

    nodes: 3
    1 -> 2; 2 -> 3
    2 <-> 3

and a JSON mirror ``{"n": 3, "directed": [[1, 2], [2, 3]],
"bidirected": [[2, 3]], "cyclic": false}``.
"""

from __future__ import annotations

import heapq
import json
import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Hashable, Iterable

__all__ = [
    "MixedGraph",
    "GraphError",
    "GraphSyntaxError",
    "parse_graph",
    "graph_from_json",
    "missing_pairs",
    "parents",
]


class GraphError(ValueError):
    """Structural problem with a graph (self-loop, cycle, bad index)."""


class GraphSyntaxError(GraphError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class MixedGraph:
    n: int
    directed: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    bidirected: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    cyclic: bool = False

    def __post_init__(self):
        if self.n < 0:
            raise GraphError("node count must be non-negative")
        bi = set()
        for i, j in self.bidirected:
            if i == j:
                raise GraphError(f"bidirected self-loop at node {i}")
            bi.add((min(i, j), max(i, j)))
        object.__setattr__(self, "bidirected", frozenset(bi))
        object.__setattr__(self, "directed", frozenset((int(i), int(j)) for i, j in self.directed))
        for i, j in self.directed | self.bidirected:
            for v in (i, j):
                if not 1 <= v <= self.n:
                    raise GraphError(f"node {v} out of range 1..{self.n}")
        for i, j in self.directed:
            if i == j:
                raise GraphError(f"directed self-loop at node {i}")
        if not self.cyclic:
            if _topological_order(self.n, self.directed) is None:
                raise GraphError("directed cycle in a graph not flagged cyclic")
            if any(i > j for i, j in self.directed):
                raise GraphError("acyclic graph must be topologically sorted; use relabel_topological()")

    @property
    def nodes(self) -> range:
        return range(1, self.n + 1)

    def edges(self) -> list[tuple[int, int]]:
        """Directed edges in lexicographic order; this fixes variable order."""
        return sorted(self.directed)

    def parents(self, j: int) -> list[int]:
        return parents(self, j)

    def missing_pairs(self) -> list[tuple[int, int]]:
        return missing_pairs(self)

    def to_dsl(self) -> str:
        lines = [f"nodes: {self.n}"]
        if self.cyclic:
            lines.append("cyclic: true")
        lines += [f"{i} -> {j}" for i, j in sorted(self.directed)]
        lines += [f"{i} <-> {j}" for i, j in sorted(self.bidirected)]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "directed": [list(e) for e in sorted(self.directed)],
            "bidirected": [list(e) for e in sorted(self.bidirected)],
            "cyclic": self.cyclic,
        }


def parents(g: MixedGraph, j: int) -> list[int]:
    if not 1 <= j <= g.n:
        raise GraphError(f"node {j} out of range 1..{g.n}")
    return sorted(i for i, k in g.directed if k == j)


def missing_pairs(g: MixedGraph) -> list[tuple[int, int]]:
    """Unordered pairs ``(i, j)``, ``i < j``, without a bidirected edge."""
    return [p for p in combinations(range(1, g.n + 1), 2) if p not in g.bidirected]


def _topological_order(n: int, directed: Iterable[tuple[int, int]]) -> list[int] | None:
    """Kahn's algorithm, smallest available node first; None on a cycle."""
    children: dict[int, list[int]] = {v: [] for v in range(1, n + 1)}
    indeg = {v: 0 for v in range(1, n + 1)}
    for i, j in directed:
        children[i].append(j)
        indeg[j] += 1
    heap = [v for v in range(1, n + 1) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    return order if len(order) == n else None


def _build(n: int, directed, bidirected, cyclic: bool, labels: list[Hashable]) -> tuple[MixedGraph, list]:
    """Validate, then relabel acyclic graphs so every edge points upward."""
    for i, j in directed:
        if i == j:
            raise GraphError(f"directed self-loop at node {labels[i - 1]}")
    for i, j in bidirected:
        if i == j:
            raise GraphError(f"bidirected self-loop at node {labels[i - 1]}")
    if cyclic:
        return MixedGraph(n, frozenset(directed), frozenset(bidirected), True), list(labels)
    order = _topological_order(n, directed)
    if order is None:
        raise GraphError("directed cycle (pass cyclic: true to allow cycles)")
    new_of = {old: k + 1 for k, old in enumerate(order)}
    g = MixedGraph(
        n,
        frozenset((new_of[i], new_of[j]) for i, j in directed),
        frozenset((new_of[i], new_of[j]) for i, j in bidirected),
        False,
    )
    return g, [labels[old - 1] for old in order]


_STATEMENT = re.compile(r"^\s*([^\s<>-]+)\s*(<->|->)\s*([^\s<>-]+)\s*$")
_HEADER = re.compile(r"^\s*(nodes|cyclic)\s*:\s*(\S+)\s*$")


def parse_graph(text: str, n: int | None = None, cyclic: bool | None = None) -> tuple[MixedGraph, list]:
    """Parse the DSL or JSON form.

    Returns the graph (relabeled topologically when acyclic) and the list of
    original labels, ``labels[k]`` being the input label of node ``k + 1``.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        return graph_from_json(json.loads(stripped), cyclic=cyclic)

    declared_n = n
    flag = False
    edges: list[tuple[str, str, str, int, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        col = 1
        for chunk in line.split(";"):
            if chunk.strip():
                m = _HEADER.match(chunk)
                if m:
                    key, value = m.groups()
                    if key == "nodes":
                        if not value.isdigit():
                            raise GraphSyntaxError("node count must be a non-negative integer", lineno, col)
                        declared_n = int(value)
                    else:
                        if value.lower() not in ("true", "false"):
                            raise GraphSyntaxError("cyclic flag must be true or false", lineno, col)
                        flag = value.lower() == "true"
                else:
                    m = _STATEMENT.match(chunk)
                    if not m:
                        offset = len(chunk) - len(chunk.lstrip())
                        raise GraphSyntaxError(f"cannot parse statement {chunk.strip()!r}", lineno, col + offset)
                    a, op, b = m.groups()
                    edges.append((a, op, b, lineno, col))
            col += len(chunk) + 1
    if cyclic is not None:
        flag = cyclic

    if declared_n is not None:
        labels: list[Hashable] = list(range(1, declared_n + 1))
        index = {}
        for a, _, b, lineno, col in edges:
            for tok in (a, b):
                if not re.fullmatch(r"\d+", tok):
                    raise GraphSyntaxError(f"label {tok!r} must be an integer when nodes: is declared", lineno, col)
                if not 1 <= int(tok) <= declared_n:
                    raise GraphError(f"node {tok} out of range 1..{declared_n}")
                index[tok] = int(tok)
        count = declared_n
    else:
        tokens: list[str] = []
        for a, _, b, *_ in edges:
            for tok in (a, b):
                if tok not in tokens:
                    tokens.append(tok)
        if all(re.fullmatch(r"\d+", t) for t in tokens):
            tokens.sort(key=int)
            labels = [int(t) for t in tokens]
        else:
            labels = list(tokens)
        index = {t: k + 1 for k, t in enumerate(tokens)}
        count = len(tokens)

    directed, bidirected = set(), set()
    for a, op, b, _, _ in edges:
        i, j = index[a], index[b]
        if op == "->":
            directed.add((i, j))
        else:
            bidirected.add((min(i, j), max(i, j)) if i != j else (i, j))
    return _build(count, directed, bidirected, flag, labels)


def graph_from_json(data: dict[str, Any], cyclic: bool | None = None) -> tuple[MixedGraph, list]:
    try:
        n = int(data["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphError("graph JSON needs an integer 'n'") from exc
    flag = bool(data.get("cyclic", False)) if cyclic is None else cyclic
    directed, bidirected = set(), set()
    for key, target in (("directed", directed), ("bidirected", bidirected)):
        for pair in data.get(key, []):
            i, j = (int(v) for v in pair)
            for v in (i, j):
                if not 1 <= v <= n:
                    raise GraphError(f"node {v} out of range 1..{n}")
            target.add((i, j) if key == "directed" or i == j else (min(i, j), max(i, j)))
    return _build(n, directed, bidirected, flag, list(range(1, n + 1)))
