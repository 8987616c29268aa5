import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gnncolor.datasets import COLOR_TABLE, load_graph, sample_timetable
from gnncolor.generators import complete, path, queen, random_graph
from gnncolor.graph import (
    Assignment,
    Graph,
    GraphFormatError,
    Timetable,
    count_conflicts,
    encode_intervals,
    export_dot,
    format_dimacs,
    parse_dimacs,
    parse_timetable,
)


def brute_conflicts(g, colors):
    n = 0
    for u in range(g.n):
        for v in range(u + 1, g.n):
            if (u, v) in set(g.edges) and colors[u] == colors[v]:
                n += 1
    return n


@st.composite
def graphs(draw, max_n=12):
    n = draw(st.integers(0, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True) if pairs else st.just([]))
    return Graph.from_edges(n, chosen)


# ----------------------------------------------------------------- parsing


def test_parse_minimal():
    g = parse_dimacs("p edge 3 2\ne 1 2\ne 2 3")
    assert g.n == 3
    assert g.edges == ((0, 1), (1, 2))
    assert not g.edge_count_mismatch


def test_parse_duplicate_collapses_and_flags_count():
    g = parse_dimacs("p edge 2 2\ne 1 2\ne 2 1")
    assert g.n == 2 and g.edges == ((0, 1),)
    assert g.edge_count_mismatch


def test_parse_comments_and_blank_lines():
    g = parse_dimacs("c hello\n\nc more\np edge 2 1\n\ne 2 1\n")
    assert g.edges == ((0, 1),)


@pytest.mark.parametrize(
    "text",
    [
        "e 1 2",  # edge before header
        "p edge 3 1\np edge 3 1\ne 1 2",  # duplicate header
        "p edge 3 1\ne 1 4",  # out of range
        "p edge 3 1\ne 0 1",  # 0 is out of range for 1-based files
        "p edge 3 1\ne 2 2",  # self-loop
        "p edge 3 1\ne 1",  # malformed
        "p edge x 1",
        "p edge 3\ne 1 2",
        "q 1 2",
        "c only comments",
    ],
)
def test_parse_errors(text):
    with pytest.raises(GraphFormatError):
        parse_dimacs(text)


def test_myciel5_file():
    g = load_graph("myciel5")
    assert (g.n, g.m) == (47, 236)


@pytest.mark.parametrize("row", COLOR_TABLE, ids=lambda r: r.name)
def test_bundled_graphs_match_table_sizes(row):
    g = load_graph(row.name)
    assert (g.n, g.m) == (row.nodes, row.edges)


@settings(max_examples=60)
@given(graphs())
def test_dimacs_round_trip(g):
    assert parse_dimacs(format_dimacs(g, comment="x")) == g


@settings(max_examples=60)
@given(graphs())
def test_graph_invariants(g):
    assert all(u < v for u, v in g.edges)
    assert len(set(g.edges)) == g.m
    assert sum(g.degrees) == 2 * g.m
    for v in range(g.n):
        assert list(g.adjacency[v]) == sorted(g.adjacency[v])
        for u in g.adjacency[v]:
            assert (min(u, v), max(u, v)) in g.edges


def test_graph_rejects_self_loop_and_range():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 3)])


# ---------------------------------------------------------------- conflicts


def test_count_conflicts_examples():
    tri = complete(3)
    assert count_conflicts(tri, [0, 0, 0]) == 3
    assert count_conflicts(tri, [0, 1, 2]) == 0
    p3 = path(3)
    assert count_conflicts(p3, [0, 1, 0]) == 0
    assert count_conflicts(p3, [0, 0, 1]) == 1


def test_count_conflicts_length_mismatch():
    with pytest.raises(ValueError):
        count_conflicts(path(3), [0, 1])


@settings(max_examples=80)
@given(graphs(), st.data())
def test_count_conflicts_matches_scan_and_is_label_invariant(g, data):
    k = data.draw(st.integers(1, 4))
    colors = data.draw(st.lists(st.integers(0, k - 1), min_size=g.n, max_size=g.n))
    c = count_conflicts(g, colors)
    assert c == brute_conflicts(g, colors)
    perm = data.draw(st.permutations(range(k)))
    assert count_conflicts(g, [perm[x] for x in colors]) == c
    proper = all(colors[u] != colors[v] for u, v in g.edges)
    assert (c == 0) == proper


def test_assignment_rejects_out_of_range_color():
    with pytest.raises(ValueError):
        Assignment.of(path(2), [0, 2], 2)


# ------------------------------------------------------------ interval graphs


def test_encode_intervals_examples():
    g = encode_intervals(Timetable.from_pairs([(60, 180), (120, 240), (300, 360)]))
    assert g.edges == ((0, 1),)
    g = encode_intervals(Timetable.from_pairs([(0, 60), (60, 120)]))
    assert g.edges == ()


def test_timetable_rejects_inverted_interval():
    with pytest.raises(ValueError):
        Timetable.from_pairs([(60, 60)])


def max_simultaneous(t):
    events = sorted([(r.depart, 1) for r in t.requests] + [(r.arrive, -1) for r in t.requests])
    best = cur = 0
    for _, d in events:  # arrivals sort before departures at equal times
        cur += d
        best = max(best, cur)
    return best


def max_clique(g):
    adj = [set(a) for a in g.adjacency]
    best = 0
    for r in range(1, g.n + 1):
        found = False
        for sub in itertools.combinations(range(g.n), r):
            if all(v in adj[u] for u, v in itertools.combinations(sub, 2)):
                found = True
                break
        if not found:
            break
        best = r
    return best


@settings(max_examples=40)
@given(st.lists(st.tuples(st.integers(0, 50), st.integers(1, 20)), min_size=1, max_size=8))
def test_interval_clique_equals_sweep(spans):
    t = Timetable.from_pairs([(d, d + w) for d, w in spans])
    assert max_clique(encode_intervals(t)) == max_simultaneous(t)


def test_sample_timetable_structure():
    t = sample_timetable()
    g = encode_intervals(t)
    assert g.n == 7
    assert max_clique(g) == 4 == max_simultaneous(t)
    # exhaustive search over all 4^7 colorings
    assert any(count_conflicts(g, c) == 0 for c in itertools.product(range(4), repeat=7))
    assert not any(count_conflicts(g, c) == 0 for c in itertools.product(range(3), repeat=7))
    # u1 and u2 are disjoint, u1 and u3 overlap
    assert (0, 1) not in g.edges and (0, 2) in g.edges


def test_parse_timetable():
    t = parse_timetable("id,depart,arrive\na,17:00,17:15\nb,17:15,18:00\n")
    assert [(r.id, r.depart, r.arrive) for r in t.requests] == [("a", 1020, 1035), ("b", 1035, 1080)]


@pytest.mark.parametrize(
    "text",
    [
        "who,depart,arrive\na,17:00,17:15\n",
        "id,depart,arrive\na,1700,17:15\n",
        "id,depart,arrive\na,17:30,17:15\n",
        "id,depart,arrive\na,25:00,26:00\n",
    ],
)
def test_parse_timetable_errors(text):
    with pytest.raises(GraphFormatError):
        parse_timetable(text)


# ----------------------------------------------------------------------- DOT


def test_dot_proper_triangle():
    tri = complete(3)
    dot = export_dot(tri, Assignment.of(tri, [0, 1, 2], 3))
    assert dot.count("color=gray") == 3 and "color=red" not in dot


def test_dot_single_conflict_edge():
    g = path(2)
    dot = export_dot(g, Assignment.of(g, [0, 0], 1))
    assert dot.count("color=red") == 1 and "color=gray" not in dot


def queen13_fixture_with_15_conflicts():
    """Proper 13-coloring (2r + c) mod 13, then greedy damage until 15 clashes."""
    g = queen(13, 13)
    colors = [(2 * (v // 13) + v % 13) % 13 for v in range(g.n)]
    assert count_conflicts(g, colors) == 0
    v = 0
    while count_conflicts(g, colors) < 15:
        trial = list(colors)
        trial[v] = (trial[v] + 1) % 13
        if count_conflicts(g, trial) <= 15:
            colors = trial
        v += 1
    return g, colors


def test_dot_queen13_fifteen_red_edges():
    g, colors = queen13_fixture_with_15_conflicts()
    assert brute_conflicts(g, colors) == 15
    dot = export_dot(g, Assignment.of(g, colors, 13))
    assert dot.count("color=red") == 15
    assert dot.count("color=gray") == 3328 - 15


def test_random_graph_is_reproducible():
    a = random_graph(10, 0.3, np.random.default_rng(4))
    b = random_graph(10, 0.3, np.random.default_rng(4))
    assert a == b
