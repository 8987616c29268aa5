"""Classical comparators: DSATUR greedy coloring and Tabucol local search."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Assignment, Graph, count_conflicts


def dsatur(g: Graph) -> Assignment:
    """Proper coloring by maximum saturation degree.

    Ties go to the higher degree, then the lower node index. ``k`` of the
    result is the number of colors used.
    """
    n = g.n
    if n == 0:
        return Assignment((), 0, 0)
    colors = [-1] * n
    seen: list[set[int]] = [set() for _ in range(n)]
    # lazy max-heap on (saturation, degree, -index)
    heap = [(0, -g.degrees[v], v) for v in range(n)]
    heapq.heapify(heap)
    while heap:
        neg_sat, _, v = heapq.heappop(heap)
        if colors[v] != -1 or -neg_sat != len(seen[v]):
            continue
        c = 0
        while c in seen[v]:
            c += 1
        colors[v] = c
        for u in g.adjacency[v]:
            if colors[u] == -1 and c not in seen[u]:
                seen[u].add(c)
                heapq.heappush(heap, (-len(seen[u]), -g.degrees[u], u))
    k = max(colors) + 1
    return Assignment(tuple(colors), k, count_conflicts(g, colors))


@dataclass(frozen=True)
class TabuConfig:
    max_moves: int = 100_000
    tenure_base: int = 10
    tenure_frac: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if self.max_moves < 1:
            raise ValueError("max_moves must be >= 1")
        if self.tenure_base < 0 or self.tenure_frac < 0:
            raise ValueError("tenure parameters must be non-negative")


@dataclass(frozen=True)
class TabuResult:
    assignment: Assignment
    initial_conflicts: int
    moves: int


def tabucol(
    g: Graph, k: int, cfg: TabuConfig | None = None, initial: Sequence[int] | None = None
) -> TabuResult:
    """Tabu search over k-colorings minimizing conflicts.

    Each move recolors one conflicted node to the color giving the lowest
    resulting conflict count; moving ``v`` off color ``c`` forbids ``(v, c)``
    for ``tenure_base + tenure_frac * conflicts + randint(0, 9)`` moves unless
    the move would beat the best count seen so far.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    cfg = cfg or TabuConfig()
    rng = np.random.default_rng(cfg.seed)
    n = g.n
    if initial is None:
        col = rng.integers(0, k, n)
    else:
        col = np.asarray(initial, dtype=np.int64).copy()
        if col.shape != (n,) or (n and (col.min() < 0 or col.max() >= k)):
            raise ValueError("initial coloring must have one color in [0, k) per node")

    # gamma[v, c] = number of neighbors of v currently colored c
    gamma = np.zeros((n, k), dtype=np.int64)
    e = g.edge_array()
    np.add.at(gamma, (e[:, 0], col[e[:, 1]]), 1)
    np.add.at(gamma, (e[:, 1], col[e[:, 0]]), 1)
    nodes = np.arange(n)

    conflicts = count_conflicts(g, col)
    initial_conflicts = conflicts
    best, best_col = conflicts, col.copy()
    tabu_until = np.zeros((n, k), dtype=np.int64)
    moves = 0
    while best > 0 and moves < cfg.max_moves:
        own = gamma[nodes, col]
        cand = np.flatnonzero(own > 0)
        delta = gamma[cand] - own[cand, None]
        allowed = (tabu_until[cand] <= moves) | (conflicts + delta < best)
        # staying on the current color is not a move
        allowed[np.arange(len(cand)), col[cand]] = False
        if k == 1 or not allowed.any():
            moves += 1
            continue
        masked = np.where(allowed, delta, np.iinfo(np.int64).max // 2)
        flat = np.flatnonzero(masked == masked.min())
        pick = flat[rng.integers(len(flat))]
        i, c_new = divmod(int(pick), k)
        v = int(cand[i])
        c_old = int(col[v])
        conflicts += int(masked.flat[pick])
        for u in g.adjacency[v]:
            gamma[u, c_old] -= 1
            gamma[u, c_new] += 1
        col[v] = c_new
        moves += 1
        tabu_until[v, c_old] = moves + int(cfg.tenure_base + cfg.tenure_frac * conflicts) + int(rng.integers(0, 10))
        if conflicts < best:
            best, best_col = conflicts, col.copy()
    return TabuResult(Assignment(tuple(int(c) for c in best_col), k, best), initial_conflicts, moves)
