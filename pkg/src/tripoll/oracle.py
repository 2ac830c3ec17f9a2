"""Sequential brute-force reference for small graphs.

Uses adjacency sets and membership tests only: no DODGr, no messages, no
merge.  Role assignment ``p <+ q <+ r`` reuses ``degree_order_less`` so
role-ordered survey keys line up with the distributed kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graph import Graph, degree_order_less
from .survey import TriangleMeta

__all__ = ["DEFAULT_CAP", "OracleGraph", "oracle_survey", "oracle_triangles"]

DEFAULT_CAP = 10_000

_SIMULTANEOUS = -(1 << 31)


@dataclass
class OracleGraph:
    adj: dict[int, set[int]]
    vertex_meta: dict
    edge_meta: dict[frozenset, object]

    @classmethod
    def from_graph(cls, g: Graph) -> OracleGraph:
        adj: dict[int, set[int]] = {}
        edge_meta = {}
        for (u, v), m in g.edges.items():
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
            edge_meta[frozenset((u, v))] = m
        return cls(adj, dict(g.vertex_meta), edge_meta)


def oracle_triangles(g: Graph | OracleGraph, cap: int = DEFAULT_CAP) -> list[TriangleMeta]:
    og = g if isinstance(g, OracleGraph) else OracleGraph.from_graph(g)
    if len(og.adj) > cap:
        raise ValueError(f"oracle is capped at {cap} vertices, graph has {len(og.adj)}")
    deg = {v: len(nb) for v, nb in og.adj.items()}
    vm = og.vertex_meta.get
    em = og.edge_meta
    out = []
    for p in sorted(og.adj):
        higher = [v for v in og.adj[p] if degree_order_less(p, v, deg)]
        for q in higher:
            for r in higher:
                if r in og.adj[q] and degree_order_less(q, r, deg):
                    out.append(
                        TriangleMeta(
                            p, q, r, vm(p), vm(q), vm(r),
                            em[frozenset((p, q))], em[frozenset((p, r))], em[frozenset((q, r))],
                            deg[p], deg[q], deg[r],
                        )
                    )
    return out


def _bin(delta) -> int:
    if delta == 0:
        return _SIMULTANEOUS
    k = 0
    while 2**k < delta:
        k += 1
    return k


def _log2_ceil(n: int) -> int:
    k = 0
    while 2**k < n:
        k += 1
    return k


def oracle_survey(g: Graph | OracleGraph, which: str, *, strict_pseudocode: bool = False, cap: int = DEFAULT_CAP) -> list[tuple]:
    """Recompute one survey's snapshot from the brute-force triangle list."""
    tris = oracle_triangles(g, cap)
    if which == "count":
        return [("triangles", len(tris))]
    counts: dict = {}
    for t in tris:
        labels = (t.p_meta, t.q_meta, t.r_meta)
        distinct = len(set(labels)) == 3
        if which == "max-edge-label":
            key = max(t.pq_meta, t.pr_meta, t.qr_meta) if distinct else None
        elif which == "closure-times":
            if strict_pseudocode and not distinct:
                continue
            t1, t2, t3 = sorted((t.pq_meta, t.pr_meta, t.qr_meta))
            key = (_bin(t2 - t1), _bin(t3 - t1))
        elif which == "label-triples":
            key = tuple(sorted(labels)) if distinct else None
        elif which == "degree-triples":
            key = (_log2_ceil(t.p_deg), _log2_ceil(t.q_deg), _log2_ceil(t.r_deg))
        else:
            raise ValueError(f"unknown survey {which!r}")
        if key is not None:
            counts[key] = counts.get(key, 0) + 1
    return sorted(counts.items())
