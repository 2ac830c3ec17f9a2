"""Graph ingestion and the degree-ordered directed graph (DODGr).

Vertices are totally ordered by ``(degree, mix64(id), id)``.  Every
undirected edge is kept once, directed from its smaller endpoint, so
high-degree vertices end up with mostly in-edges and short out-lists.

The order is materialised as a single integer key,
``degree << 128 | mix64(id) << 64 | id``, which compares exactly like the
tuple but is much cheaper to compare in tight loops.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence, Union

from .comm import DEFAULT_FLUSH_THRESHOLD, Comm, RankContext
from .containers import mix64

__all__ = [
    "AugmentedNeighbor",
    "DodgrPartition",
    "Graph",
    "GraphError",
    "IngestError",
    "IngestStats",
    "VertexRecord",
    "build_dodgr",
    "degree_order_less",
    "graph_stats",
    "ingest",
    "order_key",
    "parse_meta",
    "vertex_owner",
    "wedge_count",
]

MetaValue = Union[None, int, float, str]

_MAX_ID = (1 << 64) - 1
_INT_RE = re.compile(r"[+-]?\d+\Z")
_FLOAT_RE = re.compile(r"[+-]?(\d+\.?\d*([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?)\Z")


class GraphError(ValueError):
    pass


class IngestError(GraphError):
    pass


def parse_meta(token: str | None) -> MetaValue:
    """Integer if it looks like one, else float, else the text itself."""
    if token is None:
        return None
    if _INT_RE.match(token):
        return int(token)
    if _FLOAT_RE.match(token):
        return float(token)
    return token


def order_key(v: int, degree: int) -> int:
    return (degree << 128) | (mix64(v) << 64) | v


def degree_order_less(u: int, v: int, degrees) -> bool:
    """``u <+ v``: lower degree first, then lower hash, then lower id."""
    return order_key(u, degrees[u]) < order_key(v, degrees[v])


def vertex_owner(v: int, num_ranks: int) -> int:
    return mix64(v) % num_ranks


# -- ingestion ----------------------------------------------------------------


@dataclass
class IngestStats:
    lines: int = 0
    comments: int = 0
    self_loops_dropped: int = 0
    duplicates_collapsed: int = 0


@dataclass
class Graph:
    """Cleaned, undirected, simple graph with metadata.

    ``edges`` maps ``(min_id, max_id)`` to the edge's metadata.  When ids
    were dictionary encoded, ``names[i]`` is the original token of id ``i``.
    """

    edges: dict[tuple[int, int], MetaValue] = field(default_factory=dict)
    vertex_meta: dict[int, MetaValue] = field(default_factory=dict)
    names: list[str] | None = None
    stats: IngestStats = field(default_factory=IngestStats)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[Sequence],
        vertex_meta: dict[int, MetaValue] | None = None,
        *,
        dedup_keep_min_meta: bool = False,
        drop_self_loops: bool = True,
    ) -> Graph:
        g = cls(vertex_meta=dict(vertex_meta or {}))
        for lineno, e in enumerate(edges, 1):
            u, v = e[0], e[1]
            meta = e[2] if len(e) > 2 else None
            g._add(u, v, meta, lineno, dedup_keep_min_meta, drop_self_loops)
        return g

    def _add(self, u, v, meta, lineno, keep_min, drop_self_loops) -> None:
        if u == v:
            if drop_self_loops:
                self.stats.self_loops_dropped += 1
                return
            raise IngestError(f"line {lineno}: self-loop on vertex {self.label(u)} is not supported")
        if keep_min and not _is_number(meta):
            raise IngestError(
                f"line {lineno}: edge {self.label(u)} {self.label(v)} has non-numeric metadata "
                f"{meta!r}; keep-min deduplication needs numbers"
            )
        key = (u, v) if u < v else (v, u)
        edges = self.edges
        if key in edges:
            self.stats.duplicates_collapsed += 1
            if keep_min and meta < edges[key]:
                edges[key] = meta
        else:
            edges[key] = meta

    def label(self, v: int) -> str:
        if self.names is not None and 0 <= v < len(self.names):
            return self.names[v]
        return str(v)

    def degrees(self) -> dict[int, int]:
        deg: dict[int, int] = {}
        for u, v in self.edges:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        return deg

    def vertices(self) -> set[int]:
        vs = set(self.vertex_meta)
        for u, v in self.edges:
            vs.add(u)
            vs.add(v)
        return vs

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def _is_number(x) -> bool:
    return type(x) is int or type(x) is float


def _read_lines(source) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def _tokens(source, want: range, what: str, stats: IngestStats | None) -> list[tuple[int, list[str]]]:
    rows = []
    for lineno, line in enumerate(_read_lines(source), 1):
        if stats is not None:
            stats.lines += 1
        text = line.strip()
        if not text or text.startswith("#"):
            if stats is not None and text:
                stats.comments += 1
            continue
        parts = text.split()
        if len(parts) not in want:
            raise IngestError(
                f"{what} line {lineno}: expected {want.start}"
                + (f"-{want.stop - 1}" if len(want) > 1 else "")
                + f" fields, got {len(parts)}: {text!r}"
            )
        rows.append((lineno, parts))
    return rows


def _numeric_id(tok: str) -> int | None:
    if tok.isascii() and tok.isdigit():
        v = int(tok)
        if v <= _MAX_ID:
            return v
    return None


def ingest(
    source,
    vertex_meta_source=None,
    *,
    dedup_keep_min_meta: bool = False,
    drop_self_loops: bool = True,
) -> Graph:
    """Parse ``u v [edge_meta]`` lines (and optional ``v vertex_meta`` lines).

    ``source`` is a path or an iterable of lines.  If every vertex token is
    an unsigned 64-bit integer it is used as the id; otherwise all tokens
    are dictionary encoded in first-seen order.
    """
    stats = IngestStats()
    edge_rows = _tokens(source, range(2, 4), "edge", stats)
    meta_rows = _tokens(vertex_meta_source, range(2, 3), "vertex metadata", None) if vertex_meta_source is not None else []

    numeric = all(
        _numeric_id(p[0]) is not None and _numeric_id(p[1]) is not None for _, p in edge_rows
    ) and all(_numeric_id(p[0]) is not None for _, p in meta_rows)

    names: list[str] | None = None
    if numeric:
        to_id = int
    else:
        index: dict[str, int] = {}
        names = []

        def to_id(tok: str) -> int:
            i = index.get(tok)
            if i is None:
                i = index[tok] = len(names)
                names.append(tok)
            return i

    g = Graph(names=names, stats=stats)
    for lineno, parts in edge_rows:
        u = to_id(parts[0])
        v = to_id(parts[1])
        meta = parse_meta(parts[2]) if len(parts) == 3 else None
        g._add(u, v, meta, lineno, dedup_keep_min_meta, drop_self_loops)
    for _, parts in meta_rows:
        g.vertex_meta[to_id(parts[0])] = parse_meta(parts[1])
    return g


# -- the distributed DODGr --------------------------------------------------------


class AugmentedNeighbor(NamedTuple):
    v: int
    edge_meta: MetaValue
    vertex_meta: MetaValue
    v_outdeg: int
    v_degree: int


class VertexRecord:
    """A stored vertex: its metadata plus ``Adj_+^m`` as parallel lists sorted by order key."""

    __slots__ = ("id", "meta", "degree", "key", "has_meta", "ids", "keys", "degs", "outdegs", "emeta", "vmeta")

    def __init__(self, vid: int):
        self.id = vid
        self.meta: MetaValue = None
        self.has_meta = False
        self.degree = 0
        self.key = 0
        self.ids: list[int] = []
        self.keys: list[int] = []
        self.degs: list[int] = []
        self.outdegs: list[int] = []
        self.emeta: list = []
        self.vmeta: list = []

    @property
    def out_degree(self) -> int:
        return len(self.ids)

    def neighbors(self) -> list[AugmentedNeighbor]:
        return [
            AugmentedNeighbor(*row)
            for row in zip(self.ids, self.emeta, self.vmeta, self.outdegs, self.degs)
        ]

    def _sort(self) -> None:
        order = sorted(range(len(self.keys)), key=self.keys.__getitem__)
        for name in ("ids", "keys", "degs", "outdegs", "emeta", "vmeta"):
            col = getattr(self, name)
            setattr(self, name, [col[i] for i in order])

    def __repr__(self) -> str:
        return f"VertexRecord(id={self.id}, degree={self.degree}, out={self.ids})"


@dataclass
class DodgrPartition:
    rank: int
    num_ranks: int
    vertices: dict[int, VertexRecord] = field(default_factory=dict)

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, rec in self.vertices.items():
            for v in rec.ids:
                yield u, v


def build_dodgr(
    graph: Graph,
    num_ranks: int,
    *,
    flush_threshold: int = DEFAULT_FLUSH_THRESHOLD,
    require_vertex_meta: bool = False,
) -> list[DodgrPartition]:
    """Construct the DODGr as a sequence of message rounds over ``num_ranks`` ranks.

    Round 1 routes degree contributions and vertex metadata to owners.
    Round 2 sends each edge through ``Rank(u)`` to ``Rank(v)``, which now
    knows both degrees and stores the edge on the smaller endpoint's rank.
    Round 3 asks each target's owner for its out-degree, then lists are sorted.
    """
    return _DodgrBuilder(graph, num_ranks, flush_threshold).run(require_vertex_meta)


class _DodgrBuilder:
    def __init__(self, graph: Graph, num_ranks: int, flush_threshold: int):
        self.graph = graph
        self.n = num_ranks
        self.comm = comm = Comm(num_ranks, flush_threshold)
        self.parts = [DodgrPartition(r, num_ranks) for r in range(num_ranks)]
        self.outdeg_of: list[dict[int, int]] = [{} for _ in range(num_ranks)]
        self.h_degrees = comm.register(self._on_degrees)
        self.h_vmeta = comm.register(self._on_vmeta)
        self.h_probe = comm.register(self._on_probe)
        self.h_decide = comm.register(self._on_decide)
        self.h_store = comm.register(self._on_store)
        self.h_outdeg_query = comm.register(self._on_outdeg_query)
        self.h_outdeg_reply = comm.register(self._on_outdeg_reply)

    def _record(self, rank: int, v: int) -> VertexRecord:
        verts = self.parts[rank].vertices
        rec = verts.get(v)
        if rec is None:
            rec = verts[v] = VertexRecord(v)
        return rec

    def run(self, require_vertex_meta: bool) -> list[DodgrPartition]:
        n = self.n
        comm = self.comm
        # each rank starts with a round-robin slice of the input, as if it had read a file chunk
        edge_items = list(self.graph.edges.items())
        meta_items = list(self.graph.vertex_meta.items())
        chunks = [edge_items[r::n] for r in range(n)]

        for ctx in comm.ranks:
            tally: dict[int, int] = {}
            for (u, v), _ in chunks[ctx.rank]:
                tally[u] = tally.get(u, 0) + 1
                tally[v] = tally.get(v, 0) + 1
            for dest, (ids, counts) in _group(tally.items(), n):
                ctx.send(dest, self.h_degrees, ids, counts)
            for dest, (ids, metas) in _group(meta_items[ctx.rank :: n], n):
                ctx.send(dest, self.h_vmeta, ids, metas)
        comm.barrier()
        for part in self.parts:
            for v, rec in part.vertices.items():
                rec.key = order_key(v, rec.degree)

        if require_vertex_meta:
            for part in self.parts:
                for v in sorted(part.vertices):
                    if not part.vertices[v].has_meta:
                        raise GraphError(f"vertex {self.graph.label(v)} has no metadata")

        for ctx in comm.ranks:
            groups: dict[int, tuple[list, list, list]] = {}
            for (u, v), m in chunks[ctx.rank]:
                us, vs, ms = groups.setdefault(vertex_owner(u, n), ([], [], []))
                us.append(u)
                vs.append(v)
                ms.append(m)
            for dest in sorted(groups):
                ctx.send(dest, self.h_probe, *groups[dest])
        comm.barrier()

        for ctx in comm.ranks:
            targets: dict[int, list] = {}
            for rec in self.parts[ctx.rank].vertices.values():
                for t in rec.ids:
                    targets.setdefault(vertex_owner(t, n), []).append(t)
            for dest in sorted(targets):
                ctx.send(dest, self.h_outdeg_query, sorted(set(targets[dest])))
        comm.barrier()

        for part, outdeg_of in zip(self.parts, self.outdeg_of):
            for rec in part.vertices.values():
                rec.outdegs = [outdeg_of[t] for t in rec.ids]
                rec._sort()
        return self.parts

    def _on_degrees(self, ctx: RankContext, ids: list, counts: list) -> None:
        for v, c in zip(ids, counts):
            self._record(ctx.rank, v).degree += c

    def _on_vmeta(self, ctx: RankContext, ids: list, metas: list) -> None:
        for v, m in zip(ids, metas):
            rec = self._record(ctx.rank, v)
            rec.meta = m
            rec.has_meta = True

    def _on_probe(self, ctx: RankContext, us: list, vs: list, ms: list) -> None:
        verts = self.parts[ctx.rank].vertices
        groups: dict[int, tuple[list, list, list, list, list]] = {}
        for u, v, m in zip(us, vs, ms):
            ru = verts[u]
            g = groups.setdefault(vertex_owner(v, self.n), ([], [], [], [], []))
            g[0].append(u)
            g[1].append(ru.degree)
            g[2].append(ru.meta)
            g[3].append(v)
            g[4].append(m)
        for dest in sorted(groups):
            ctx.send(dest, self.h_decide, *groups[dest])

    def _on_decide(self, ctx: RankContext, us, dus, mus, vs, ms) -> None:
        verts = self.parts[ctx.rank].vertices
        remote: dict[int, tuple[list, ...]] = {}
        for u, du, mu, v, m in zip(us, dus, mus, vs, ms):
            rv = verts[v]
            ku = order_key(u, du)
            if ku < rv.key:
                g = remote.setdefault(vertex_owner(u, self.n), ([], [], [], [], []))
                for col, x in zip(g, (u, v, rv.degree, m, rv.meta)):
                    col.append(x)
            else:
                _append(rv, u, ku, du, m, mu)
        for dest in sorted(remote):
            ctx.send(dest, self.h_store, *remote[dest])

    def _on_store(self, ctx: RankContext, srcs, tgts, tdegs, ms, tmetas) -> None:
        verts = self.parts[ctx.rank].vertices
        for s, t, d, m, tm in zip(srcs, tgts, tdegs, ms, tmetas):
            _append(verts[s], t, order_key(t, d), d, m, tm)

    def _on_outdeg_query(self, ctx: RankContext, ids: list) -> None:
        verts = self.parts[ctx.rank].vertices
        ctx.send(ctx.source, self.h_outdeg_reply, ids, [verts[v].out_degree for v in ids])

    def _on_outdeg_reply(self, ctx: RankContext, ids: list, outdegs: list) -> None:
        self.outdeg_of[ctx.rank].update(zip(ids, outdegs))


def _append(rec: VertexRecord, t: int, key: int, deg: int, emeta, tmeta) -> None:
    rec.ids.append(t)
    rec.keys.append(key)
    rec.degs.append(deg)
    rec.emeta.append(emeta)
    rec.vmeta.append(tmeta)


def _group(items, n: int):
    groups: dict[int, tuple[list, list]] = {}
    for k, val in items:
        a, b = groups.setdefault(vertex_owner(k, n), ([], []))
        a.append(k)
        b.append(val)
    return sorted(groups.items())


def wedge_count(partitions: Sequence[DodgrPartition]) -> int:
    """``|W_+|``: sum over vertices of C(out-degree, 2)."""
    return sum(comb(len(rec.ids), 2) for part in partitions for rec in part.vertices.values())


def graph_stats(partitions: Sequence[DodgrPartition]) -> dict[str, int]:
    """Dataset-table columns.  ``edges`` counts directed edges after symmetrizing."""
    n_vertices = 0
    undirected = 0
    d_max = 0
    d_plus_max = 0
    for part in partitions:
        for rec in part.vertices.values():
            n_vertices += 1
            undirected += len(rec.ids)
            d_max = max(d_max, rec.degree)
            d_plus_max = max(d_plus_max, len(rec.ids))
    return {
        "vertices": n_vertices,
        "edges": 2 * undirected,
        "d_max": d_max,
        "d_plus_max": d_plus_max,
        "wedges": wedge_count(partitions),
    }
