import pytest

from conftest import complete, gnp
from tripoll import Graph, oracle_survey, oracle_triangles


@pytest.mark.parametrize("n,expected", [(3, 1), (4, 4), (5, 10)])
def test_complete_graphs(n, expected):
    assert len(oracle_triangles(complete(n))) == expected


def test_cycle():
    assert oracle_triangles(Graph.from_edges([(i, (i + 1) % 5) for i in range(5)])) == []


def test_matches_naive_triple_loop():
    g = gnp(25, 0.4, 3)
    adj = {(u, v) for u, v in g.edges} | {(v, u) for u, v in g.edges}
    vs = sorted(g.vertices())
    naive = sum(
        1
        for i, a in enumerate(vs)
        for j, b in enumerate(vs[i + 1 :], i + 1)
        for c in vs[j + 1 :]
        if (a, b) in adj and (a, c) in adj and (b, c) in adj
    )
    assert len(oracle_triangles(g)) == naive


def test_closure_on_k3():
    g = Graph.from_edges([(0, 1, 10), (0, 2, 14), (1, 2, 26)])
    assert oracle_survey(g, "closure-times") == [((2, 4), 1)]


def test_cap():
    with pytest.raises(ValueError, match="capped"):
        oracle_triangles(complete(5), cap=4)


def test_unknown_survey():
    with pytest.raises(ValueError):
        oracle_survey(complete(3), "nope")
