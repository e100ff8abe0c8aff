import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lclgame.graph_core import (
    Graph,
    GraphError,
    ball,
    ball_shape,
    graph_from_json,
    make_family,
    parse_family,
    parse_graph,
)


def floyd_warshall(g):
    inf = float("inf")
    d = [[0 if i == j else inf for j in range(g.n)] for i in range(g.n)]
    for u, v in g.edges():
        d[u][v] = d[v][u] = 1
    for k, i, j in itertools.product(range(g.n), repeat=3):
        if d[i][k] + d[k][j] < d[i][j]:
            d[i][j] = d[i][k] + d[k][j]
    return d


def test_parse_graph_roundtrip():
    g = parse_graph("# triangle\nn 3\n0 1\n1 2  # second\n2 0\n")
    assert g.n == 3
    assert g.edges() == [(0, 1), (0, 2), (1, 2)]
    assert parse_graph(g.render()) == g
    assert graph_from_json(g.to_json()) == g


@pytest.mark.parametrize(
    "text, line",
    [
        ("n 3\n0 1\n0 1\n1 2\n", 3),
        ("n 3\n0 0\n", 2),
        ("n 2\n0 5\n", 2),
        ("n 4\n0 1\n2 3\n", 3),
        ("0 1\n", 1),
        ("n 3\n0 x\n", 2),
    ],
)
def test_parse_graph_errors_carry_line(text, line):
    with pytest.raises(GraphError, match=f"line {line}"):
        parse_graph(text)


def test_families():
    assert make_family("k2").edges() == [(0, 1)]
    c = parse_family("cycle:5")
    assert c.n == 5 and all(c.degree(v) == 2 for v in range(5))
    p = make_family("path", 4)
    assert p.diameter() == 3
    assert make_family("complete", 4).delta == 3
    assert make_family("k2").delta == 2  # floor of 2 keeps coloring(delta+1) meaningful
    with pytest.raises(GraphError):
        parse_family("cycle:2")
    with pytest.raises(GraphError):
        parse_family("torus:3")


def test_random_bounded_is_reproducible_and_bounded():
    for seed in range(20):
        g = make_family("random_bounded", 12, 3, seed)
        assert g == make_family("random_bounded", 12, 3, seed)
        assert g.is_connected()
        assert max(g.degree(v) for v in range(g.n)) <= 3


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 10), st.integers(0, 10**6), st.integers(0, 3))
def test_ball_matches_distance_oracle(n, seed, t):
    g = make_family("random_bounded", n, 3, seed)
    d = floyd_warshall(g)
    for v in range(n):
        shape = ball_shape(g, v, t)
        assert set(shape.vertices) == {u for u in range(n) if d[v][u] <= t}
        assert all(d[v][u] == du for u, du in zip(shape.vertices, shape.distance))
        inside = set(shape.vertices)
        assert set(shape.edges) == {(a, b) for a, b in g.edges() if a in inside and b in inside}


def test_ball_labels_and_key():
    g = make_family("path", 3)
    b = ball(g, (0, 1, None), 1, 1)
    assert b.center_label() == 1
    assert sorted(b.neighbor_labels(), key=str) == [0, None]
    assert not b.is_complete()
    assert b.key() == "1|1:0,1:None"


def test_graph_rejects_bad_adjacency():
    with pytest.raises(GraphError):
        Graph(2, ((1,),), 2)
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 1)])
