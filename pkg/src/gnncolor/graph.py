"""Graph representation, DIMACS I/O, conflict counting and interval encoding."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np


class GraphFormatError(ValueError):
    """Raised when a DIMACS or timetable input cannot be parsed."""


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes ``0..n-1``.

    Edges are stored once as ``(u, v)`` with ``u < v``, sorted.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)
    degrees: tuple[int, ...] = field(repr=False, compare=False)
    edge_count_mismatch: bool = field(default=False, repr=False, compare=False)

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[tuple[int, int]], edge_count_mismatch: bool = False
    ) -> "Graph":
        if n < 0:
            raise ValueError(f"node count must be non-negative, got {n}")
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside [0, {n})")
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            canon.add((u, v) if u < v else (v, u))
        ordered = tuple(sorted(canon))
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in ordered:
            nbrs[u].append(v)
            nbrs[v].append(u)
        adjacency = tuple(tuple(sorted(a)) for a in nbrs)
        degrees = tuple(len(a) for a in adjacency)
        return cls(n, ordered, adjacency, degrees, edge_count_mismatch)

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_array(self) -> np.ndarray:
        """Edges as an ``(m, 2)`` integer array."""
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.asarray(self.edges, dtype=np.int64)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]


@dataclass(frozen=True)
class Assignment:
    colors: tuple[int, ...]
    k: int
    conflicts: int

    @classmethod
    def of(cls, g: Graph, colors: Sequence[int], k: int) -> "Assignment":
        cols = tuple(int(c) for c in colors)
        if any(c < 0 or c >= k for c in cols):
            raise ValueError(f"color index outside [0, {k})")
        return cls(cols, k, count_conflicts(g, cols))

    def colors_used(self) -> int:
        return len(set(self.colors))

    def to_dict(self) -> dict:
        return {"colors": list(self.colors), "k": self.k, "conflicts": self.conflicts}


@dataclass(frozen=True)
class Request:
    id: str
    depart: int
    arrive: int


@dataclass(frozen=True)
class Timetable:
    """Ride requests; times are minutes since midnight."""

    requests: tuple[Request, ...]

    def __post_init__(self):
        for r in self.requests:
            if not r.depart < r.arrive:
                raise ValueError(
                    f"request {r.id!r}: departure {r.depart} not before arrival {r.arrive}"
                )

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, int]]) -> "Timetable":
        return cls(tuple(Request(f"u{i + 1}", d, a) for i, (d, a) in enumerate(pairs)))

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.requests]


def _open_text(text: str | TextIO) -> TextIO:
    return io.StringIO(text) if isinstance(text, str) else text


def parse_dimacs(text: str | TextIO) -> Graph:
    """Parse a DIMACS ``.col`` graph (1-based ``e u v`` lines).

    A header edge count that disagrees with the distinct edges read sets
    ``Graph.edge_count_mismatch`` instead of failing; many public files list
    each edge twice.
    """
    stream = _open_text(text)
    n = declared_m = None
    raw: list[tuple[int, int]] = []
    for lineno, line in enumerate(stream, 1):
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        tag = parts[0]
        if tag == "p":
            if n is not None:
                raise GraphFormatError(f"line {lineno}: duplicate problem line")
            if len(parts) != 4 or parts[1] not in ("edge", "col"):
                raise GraphFormatError(f"line {lineno}: malformed problem line {line.strip()!r}")
            try:
                n, declared_m = int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: non-integer counts") from None
            if n < 0 or declared_m < 0:
                raise GraphFormatError(f"line {lineno}: negative counts")
        elif tag == "e":
            if n is None:
                raise GraphFormatError(f"line {lineno}: edge before problem line")
            if len(parts) != 3:
                raise GraphFormatError(f"line {lineno}: malformed edge line {line.strip()!r}")
            try:
                u, v = int(parts[1]), int(parts[2])
            except ValueError:
                raise GraphFormatError(f"line {lineno}: non-integer node index") from None
            for x in (u, v):
                if not 1 <= x <= n:
                    raise GraphFormatError(f"line {lineno}: node {x} outside [1, {n}]")
            if u == v:
                raise GraphFormatError(f"line {lineno}: self-loop on node {u}")
            raw.append((u - 1, v - 1))
        elif tag in ("n", "x", "d", "v"):
            # node weights / extras some COLOR variants carry; irrelevant here
            continue
        else:
            raise GraphFormatError(f"line {lineno}: unrecognised line {line.strip()!r}")
    if n is None:
        raise GraphFormatError("missing problem line")
    g = Graph.from_edges(n, raw)
    if g.m != declared_m:
        g = Graph(g.n, g.edges, g.adjacency, g.degrees, edge_count_mismatch=True)
    return g


def read_dimacs(path) -> Graph:
    with open(path) as fh:
        return parse_dimacs(fh)


def format_dimacs(g: Graph, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"c {c}" for c in comment.splitlines())
    lines.append(f"p edge {g.n} {g.m}")
    lines.extend(f"e {u + 1} {v + 1}" for u, v in g.edges)
    return "\n".join(lines) + "\n"


def count_conflicts(g: Graph, colors: Sequence[int]) -> int:
    """Number of edges whose endpoints share a color."""
    if len(colors) != g.n:
        raise ValueError(f"expected {g.n} colors, got {len(colors)}")
    if g.m == 0:
        return 0
    c = np.asarray(colors)
    e = g.edge_array()
    return int(np.count_nonzero(c[e[:, 0]] == c[e[:, 1]]))


def conflict_edges(g: Graph, colors: Sequence[int]) -> list[tuple[int, int]]:
    return [(u, v) for u, v in g.edges if colors[u] == colors[v]]


def encode_intervals(t: Timetable) -> Graph:
    """One node per request, joined when the half-open intervals overlap."""
    reqs = t.requests
    edges = [
        (i, j)
        for i in range(len(reqs))
        for j in range(i + 1, len(reqs))
        if reqs[i].depart < reqs[j].arrive and reqs[j].depart < reqs[i].arrive
    ]
    return Graph.from_edges(len(reqs), edges)


def _parse_clock(s: str) -> int:
    hh, sep, mm = s.strip().partition(":")
    if not sep:
        raise ValueError(f"expected HH:MM, got {s!r}")
    h, m = int(hh), int(mm)
    if not (0 <= h < 24 and 0 <= m < 60):
        raise ValueError(f"time out of range: {s!r}")
    return 60 * h + m


def format_clock(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def parse_timetable(text: str | TextIO) -> Timetable:
    """Read a headered ``id,depart,arrive`` CSV with ``HH:MM`` times."""
    reader = csv.DictReader(_open_text(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != [
        "id",
        "depart",
        "arrive",
    ]:
        raise GraphFormatError("timetable header must be 'id,depart,arrive'")
    requests = []
    for lineno, row in enumerate(reader, 2):
        try:
            requests.append(
                Request(row["id"].strip(), _parse_clock(row["depart"]), _parse_clock(row["arrive"]))
            )
        except (ValueError, AttributeError) as exc:
            raise GraphFormatError(f"line {lineno}: {exc}") from None
    try:
        return Timetable(tuple(requests))
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def read_timetable(path) -> Timetable:
    with open(path, newline="") as fh:
        return parse_timetable(fh)


def export_dot(g: Graph, a: Assignment, name: str = "G") -> str:
    """Render a colored graph as DOT; clashing edges are drawn red."""
    if len(a.colors) != g.n:
        raise ValueError(f"assignment has {len(a.colors)} colors for {g.n} nodes")
    out = [f"graph {name} {{"]
    for v in range(g.n):
        out.append(f'  {v} [label="{a.colors[v]}"];')
    for u, v in g.edges:
        color = "red" if a.colors[u] == a.colors[v] else "gray"
        out.append(f"  {u} -- {v} [color={color}];")
    out.append("}")
    return "\n".join(out) + "\n"
