import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import complete, gnp
from tripoll.generate import GRAPH500_PARAMS, rmat_edges, rmat_generate, rmat_graph
from tripoll.graph import (
    Graph,
    GraphError,
    IngestError,
    build_dodgr,
    degree_order_less,
    graph_stats,
    ingest,
    order_key,
    parse_meta,
    wedge_count,
)


def out_lists(parts):
    return {v: list(rec.ids) for part in parts for v, rec in part.vertices.items()}


# -- ingestion -----------------------------------------------------------------


def test_reverse_duplicate_is_one_edge():
    g = ingest(["1 2", "2 1"])
    assert g.edges == {(1, 2): None}
    assert g.stats.duplicates_collapsed == 1


def test_keep_min_timestamp():
    g = ingest(["1 2 9", "2 1 4"], dedup_keep_min_meta=True)
    assert g.edges == {(1, 2): 4}


def test_first_metadata_wins_by_default():
    g = ingest(["1 2 9", "2 1 4"])
    assert g.edges == {(1, 2): 9}


def test_self_loop_dropped_and_counted():
    g = ingest(["3 3", "3 4"])
    assert g.edges == {(3, 4): None}
    assert g.stats.self_loops_dropped == 1


def test_self_loop_rejected_when_kept():
    with pytest.raises(IngestError, match="self-loop"):
        ingest(["3 3"], drop_self_loops=False)


def test_comments_blank_lines_and_meta_parsing():
    g = ingest(["# header", "", "a b 1.5", "b c x", "c a 7"])
    assert g.names == ["a", "b", "c"]
    assert sorted(g.edges.values(), key=str) == [1.5, 7, "x"]


def test_vertex_meta_file(tmp_path):
    e = tmp_path / "g.edges"
    e.write_text("0 1\n1 2\n")
    m = tmp_path / "g.meta"
    m.write_text("0 red\n1 blue\n2 7\n")
    g = ingest(e, m)
    assert g.vertex_meta == {0: "red", 1: "blue", 2: 7}


def test_malformed_line_reports_line_number():
    with pytest.raises(IngestError, match="line 2"):
        ingest(["1 2", "1 2 3 4"])


def test_keep_min_needs_numbers():
    with pytest.raises(IngestError, match="non-numeric"):
        ingest(["1 2 abc"], dedup_keep_min_meta=True)


@pytest.mark.parametrize("tok,val", [("12", 12), ("-3", -3), ("2.5", 2.5), ("1e3", 1000.0), ("x1", "x1"), (None, None)])
def test_parse_meta(tok, val):
    assert parse_meta(tok) == val and type(parse_meta(tok)) is type(val)


# -- ordering ---------------------------------------------------------------------


def test_lower_degree_comes_first():
    assert degree_order_less(7, 3, {7: 2, 3: 5})


def test_hash_breaks_degree_ties():
    from tripoll.containers import mix64

    u, v = sorted((10, 11), key=mix64, reverse=True)
    assert not degree_order_less(u, v, {u: 4, v: 4})


@given(st.integers(0, (1 << 64) - 1), st.integers(0, (1 << 64) - 1), st.integers(0, 50), st.integers(0, 50))
def test_order_is_antisymmetric_and_total(u, v, du, dv):
    if u == v:
        return
    deg = {u: du, v: dv}
    assert degree_order_less(u, v, deg) != degree_order_less(v, u, deg)
    if du != dv:
        assert degree_order_less(u, v, deg) == (du < dv)
    assert degree_order_less(u, v, deg) == (order_key(u, du) < order_key(v, dv))


# -- DODGr ----------------------------------------------------------------------


def test_triangle_orientation():
    parts = build_dodgr(Graph.from_edges([(1, 2), (2, 3), (1, 3)]), 2)
    outs = out_lists(parts)
    assert sum(len(v) for v in outs.values()) == 3
    assert sorted(len(v) for v in outs.values()) == [0, 1, 2]


def test_star_points_into_center():
    g = Graph.from_edges([(0, leaf) for leaf in range(1, 6)])
    parts = build_dodgr(g, 3)
    outs = out_lists(parts)
    assert outs[0] == []
    assert all(outs[leaf] == [0] for leaf in range(1, 6))
    s = graph_stats(parts)
    assert (s["d_max"], s["d_plus_max"]) == (5, 1)


def _is_acyclic(outs):
    indeg = {v: 0 for v in outs}
    for vs in outs.values():
        for w in vs:
            indeg[w] += 1
    ready = [v for v, d in indeg.items() if d == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for w in outs[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
    return seen == len(outs)


@pytest.mark.parametrize("seed", range(5))
def test_dodgr_is_an_acyclic_orientation(seed):
    g = gnp(40, 0.3, seed)
    parts = build_dodgr(g, 4)
    outs = out_lists(parts)
    directed = {(u, v) for u, vs in outs.items() for v in vs}
    assert {tuple(sorted(e)) for e in directed} == set(g.edges)
    assert len(directed) == g.num_edges
    assert _is_acyclic(outs)
    deg = g.degrees()
    assert all(degree_order_less(u, v, deg) for u, v in directed)


def test_partitions_are_rank_invariant():
    g = gnp(60, 0.2, 9, timestamps=True, labels=4)
    reference = None
    for n in (1, 2, 3, 8):
        parts = build_dodgr(g, n)
        view = {}
        for part in parts:
            for v, rec in part.vertices.items():
                view[v] = (rec.meta, rec.degree, rec.ids, rec.degs, rec.outdegs, rec.emeta, rec.vmeta)
        reference = reference or view
        assert view == reference


def test_adjacency_columns_are_consistent():
    g = gnp(50, 0.25, 4, timestamps=True, labels=5)
    parts = build_dodgr(g, 3)
    deg = g.degrees()
    outs = out_lists(parts)
    for part in parts:
        for v, rec in part.vertices.items():
            assert rec.keys == sorted(rec.keys)
            for nb in rec.neighbors():
                assert nb.v_degree == deg[nb.v]
                assert nb.v_outdeg == len(outs[nb.v])
                assert nb.edge_meta == g.edges[tuple(sorted((v, nb.v)))]
                assert nb.vertex_meta == g.vertex_meta[nb.v]


def test_isolated_meta_only_vertices_are_kept():
    g = Graph.from_edges([(0, 1)], {0: "a", 1: "b", 5: "c"})
    parts = build_dodgr(g, 2)
    assert graph_stats(parts)["vertices"] == 3


def test_require_vertex_meta_names_vertex():
    g = Graph.from_edges([(0, 1)], {0: "a"})
    with pytest.raises(GraphError, match="1"):
        build_dodgr(g, 2, require_vertex_meta=True)


def test_empty_graph():
    assert graph_stats(build_dodgr(Graph(), 4)) == {"vertices": 0, "edges": 0, "d_max": 0, "d_plus_max": 0, "wedges": 0}


def test_k4_stats():
    assert graph_stats(build_dodgr(complete(4), 2)) == {"vertices": 4, "edges": 12, "d_max": 3, "d_plus_max": 3, "wedges": 4}


def test_triangle_has_one_wedge():
    assert wedge_count(build_dodgr(complete(3), 1)) == 1


def test_small_flush_threshold_gives_same_partitions():
    g = gnp(30, 0.3, 2)
    a = out_lists(build_dodgr(g, 3))
    b = out_lists(build_dodgr(g, 3, flush_threshold=16))
    assert a == b


@pytest.mark.parametrize("seed", range(5))
def test_wedge_count_matches_brute_force(seed):
    g = gnp(20, 0.3, seed)
    deg = g.degrees()
    adj = {v: set() for v in g.vertices()}
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    brute = 0
    for p in adj:
        for q, r in itertools.combinations(adj[p], 2):
            if degree_order_less(p, q, deg) and degree_order_less(p, r, deg):
                brute += 1
    parts = build_dodgr(g, 2)
    assert wedge_count(parts) == brute
    assert brute == sum(comb(sum(degree_order_less(p, x, deg) for x in adj[p]), 2) for p in adj)


# -- R-MAT -----------------------------------------------------------------------


def test_rmat_is_deterministic():
    assert rmat_edges(4, seed=11) == rmat_edges(4, seed=11)
    assert rmat_edges(4, seed=11) != rmat_edges(4, seed=12)


def test_rmat_shape_and_range():
    pairs = rmat_generate(6, 8, *GRAPH500_PARAMS, seed=1)
    assert pairs.shape == (8 << 6, 2)
    assert pairs.max() < 1 << 6


def test_rmat_default_params_are_skewed():
    g = rmat_graph(12, seed=3)
    parts = build_dodgr(g, 1)
    s = graph_stats(parts)
    degs = np.array(list(g.degrees().values()))
    assert s["d_max"] > 20 * np.median(degs)
    assert s["d_plus_max"] < s["d_max"]


def test_uniform_quadrants_are_not_skewed():
    g = Graph.from_edges(rmat_edges(12, seed=3, params=(0.25, 0.25, 0.25, 0.25)))
    degs = np.array(list(g.degrees().values()))
    assert degs.max() < 3 * np.median(degs)


def test_rmat_rejects_bad_params():
    with pytest.raises(ValueError):
        rmat_generate(30)
    with pytest.raises(ValueError):
        rmat_generate(4, a=0.5, b=0.5, c=0.5, d=0.5)


def test_rmat_metadata_options():
    g = rmat_graph(6, seed=2, timestamps=(0, 100), labels=3)
    assert all(0 <= t < 100 for t in g.edges.values())
    assert set(g.vertex_meta.values()) <= {"L0", "L1", "L2"}
    assert g.vertices() == set(g.vertex_meta)

