"""Deterministic constructions of the COLOR benchmark families and small test graphs."""

from __future__ import annotations

import re

import numpy as np

from .graph import Graph


def mycielski(order: int) -> Graph:
    """DIMACS ``myciel<order>`` graph: ``order - 1`` Mycielski steps applied to K2.

    ``myciel3`` is the 11-node Groetzsch graph, ``myciel5`` has 47 nodes.

    Node numbering follows the DIMACS files: originals ``0..n-1``, their
    shadows ``n..2n-1`` and the apex ``2n``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    n, edges = 2, [(0, 1)]
    for _ in range(order - 1):
        shadow = [(u, v + n) for u, v in edges] + [(v, u + n) for u, v in edges]
        apex = [(i + n, 2 * n) for i in range(n)]
        edges = edges + shadow + apex
        n = 2 * n + 1
    return Graph.from_edges(n, edges)


def queen(rows: int, cols: int) -> Graph:
    """Queen graph on a ``rows x cols`` board; cell ``(r, c)`` is node ``r*cols + c``."""
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    edges = []
    for i, (r1, c1) in enumerate(cells):
        for j in range(i + 1, len(cells)):
            r2, c2 = cells[j]
            if r1 == r2 or c1 == c2 or abs(r1 - r2) == abs(c1 - c2):
                edges.append((i, j))
    return Graph.from_edges(rows * cols, edges)


def by_name(name: str) -> Graph:
    """Build ``myciel<k>`` or ``queen<r>-<c>`` / ``queen<r>_<c>`` by name."""
    m = re.fullmatch(r"myciel(\d+)", name)
    if m:
        return mycielski(int(m.group(1)))
    m = re.fullmatch(r"queen(\d+)[-_](\d+)", name)
    if m:
        return queen(int(m.group(1)), int(m.group(2)))
    raise KeyError(f"no generator for {name!r}")


def complete(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Erdos-Renyi G(n, p)."""
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    return Graph.from_edges(n, edges)
