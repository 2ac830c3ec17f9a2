"""Concrete triangle surveys built as callbacks over the survey kernel.

Each callback has the signature ``fn(tri, state)``; ``state`` is a rank's
counting-set handle (or a tally for plain counting).  ``run_surveys``
drives any combination of them through a single enumeration pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import frexp
from typing import Callable, Sequence

from .comm import DEFAULT_FLUSH_THRESHOLD, Comm
from .containers import DEFAULT_CACHE_CAPACITY, CountingSet, snapshot_csv
from .graph import DodgrPartition
from .survey import SurveyStats, TriangleMeta, TriangleSurvey

__all__ = [
    "SIMULTANEOUS",
    "SURVEYS",
    "MetadataError",
    "SurveyRun",
    "ceil_log2",
    "close_time_marginal",
    "render_bin",
    "run_surveys",
    "snapshot_to_csv",
    "survey_closure_times",
    "survey_count",
    "survey_degree_triples",
    "survey_label_triples",
    "survey_max_edge_label",
    "time_bin",
]

SURVEYS = ("count", "max-edge-label", "closure-times", "label-triples", "degree-triples")

# bin assigned to a zero time difference; printed as "simultaneous"
SIMULTANEOUS = -(1 << 31)


class MetadataError(ValueError):
    pass


def ceil_log2(n: int) -> int:
    """Exact ``ceil(log2(n))`` for a positive integer."""
    return (n - 1).bit_length()


def time_bin(delta) -> int:
    """``ceil(log2(delta))`` with 0 for deltas in (0, 1] and ``SIMULTANEOUS`` for 0."""
    if delta == 0:
        return SIMULTANEOUS
    if delta <= 1:
        return 0
    if type(delta) is int:
        return (delta - 1).bit_length()
    mant, exp = frexp(delta)
    return exp - 1 if mant == 0.5 else exp


def render_bin(value) -> str:
    return "simultaneous" if value == SIMULTANEOUS else str(value)


def _distinct(a, b, c) -> bool:
    return a != b and a != c and b != c


# -- callbacks ------------------------------------------------------------------


class _Tally:
    __slots__ = ("n",)

    def __init__(self):
        self.n = 0


def count_triangles(tri: TriangleMeta, tally: _Tally) -> None:
    tally.n += 1


def max_edge_label(tri: TriangleMeta, counter) -> None:
    a, b, c = tri.p_meta, tri.q_meta, tri.r_meta
    edges = (tri.pq_meta, tri.pr_meta, tri.qr_meta)
    if a is None or b is None or c is None or None in edges:
        raise MetadataError("max-edge-label needs vertex and edge metadata on every triangle")
    if a != b and a != c and b != c:
        counter.increment(max(edges))


_NUMBER = (int, float)


def _closure(tri: TriangleMeta, counter) -> None:
    t1, t2, t3 = tri.pq_meta, tri.pr_meta, tri.qr_meta
    if type(t1) not in _NUMBER or type(t2) not in _NUMBER or type(t3) not in _NUMBER:
        raise MetadataError(f"closure-times needs numeric edge timestamps, got {(t1, t2, t3)!r}")
    if t1 > t2:
        t1, t2 = t2, t1
    if t2 > t3:
        t2, t3 = t3, t2
        if t1 > t2:
            t1, t2 = t2, t1
    counter.increment((time_bin(t2 - t1), time_bin(t3 - t1)))


def closure_times(tri: TriangleMeta, counter) -> None:
    _closure(tri, counter)


def closure_times_strict(tri: TriangleMeta, counter) -> None:
    """Variant that also requires pairwise-distinct vertex metadata."""
    if _distinct(tri.p_meta, tri.q_meta, tri.r_meta):
        _closure(tri, counter)


def label_triples(tri: TriangleMeta, counter) -> None:
    a, b, c = tri.p_meta, tri.q_meta, tri.r_meta
    if a is None or b is None or c is None:
        raise MetadataError(f"label-triples needs a label on every vertex, got {(a, b, c)!r}")
    if a != b and a != c and b != c:
        counter.increment(tuple(sorted((a, b, c))))


def degree_triples(tri: TriangleMeta, counter) -> None:
    counter.increment(((tri.p_deg - 1).bit_length(), (tri.q_deg - 1).bit_length(), (tri.r_deg - 1).bit_length()))


class _FusedSurvey:
    """One callback doing the work of several built-in surveys.

    Same keys and errors as calling the individual callbacks in turn, minus
    the per-survey call overhead.  State is a tuple of per-survey handles
    in ``SURVEYS`` order, with None for surveys not requested.  The kernel
    uses :meth:`batch`, which hoists everything that depends only on the
    wedge ``(p, q)`` out of the per-triangle loops.
    """

    def __init__(self, names: Sequence[str], strict_pseudocode: bool):
        self.strict = strict_pseudocode
        self.want_closure = "closure-times" in names
        self.want_labels = "max-edge-label" in names or "label-triples" in names

    def __call__(self, tri: TriangleMeta, state) -> None:
        _, _, _, a, b, c, e1, e2, e3, dp, dq, dr = tri
        self.batch(state, tri.p, tri.q, a, b, e1, dp, dq, (tri.r,), (c,), (e2,), (e3,), (dr,))

    def batch(self, state, p, q, a, b, e1, dp, dq, rs, cs, e2s, e3s, drs) -> None:
        tally, hm, hc, hl, hd = state
        if tally is not None:
            tally.n += len(rs)
        if self.want_labels:
            if a is None or b is None or None in cs:
                c = next((c for c in cs if c is None), None)
                raise MetadataError(f"vertex label missing on triangle, got {(a, b, c)!r}")
        ab = a != b
        if hm is not None:
            if e1 is None or None in e2s or None in e3s:
                raise MetadataError("max-edge-label needs vertex and edge metadata on every triangle")
            if ab:
                pending = hm.pending
                for c, e2, e3 in zip(cs, e2s, e3s):
                    if a != c and b != c:
                        k = e1 if e1 >= e2 else e2
                        if e3 > k:
                            k = e3
                        if k in pending:
                            pending[k] += 1
                        else:
                            hm.increment(k)
        if self.want_closure and (ab or not self.strict):
            strict = self.strict
            t1 = e1
            t1_ok = type(t1) in _NUMBER
            pending = hc.pending
            for c, e2, e3 in zip(cs, e2s, e3s):
                if strict and (a == c or b == c):
                    continue
                if not t1_ok or type(e2) not in _NUMBER or type(e3) not in _NUMBER:
                    raise MetadataError(f"closure-times needs numeric edge timestamps, got {(t1, e2, e3)!r}")
                e1 = t1
                if e1 > e2:
                    e1, e2 = e2, e1
                if e2 > e3:
                    e2, e3 = e3, e2
                    if e1 > e2:
                        e1, e2 = e2, e1
                d = e2 - e1
                lo = (d - 1).bit_length() if type(d) is int and d > 1 else time_bin(d)
                d = e3 - e1
                hi = (d - 1).bit_length() if type(d) is int and d > 1 else time_bin(d)
                k = (lo, hi)
                if k in pending:
                    pending[k] += 1
                else:
                    hc.increment(k)
        if hl is not None and ab:
            pending = hl.pending
            for c in cs:
                if a != c and b != c:
                    if a < b:
                        k = (a, b, c) if b < c else ((a, c, b) if a < c else (c, a, b))
                    else:
                        k = (b, a, c) if a < c else ((b, c, a) if b < c else (c, b, a))
                    if k in pending:
                        pending[k] += 1
                    else:
                        hl.increment(k)
        if hd is not None:
            bp, bq = (dp - 1).bit_length(), (dq - 1).bit_length()
            pending = hd.pending
            for dr in drs:
                k = (bp, bq, (dr - 1).bit_length())
                if k in pending:
                    pending[k] += 1
                else:
                    hd.increment(k)


# -- driver ---------------------------------------------------------------------


@dataclass
class SurveyRun:
    snapshots: dict[str, list[tuple]]
    stats: SurveyStats
    triangles: int


def _callback_for(name: str, strict_pseudocode: bool) -> Callable:
    if name == "max-edge-label":
        return max_edge_label
    if name == "closure-times":
        return closure_times_strict if strict_pseudocode else closure_times
    if name == "label-triples":
        return label_triples
    if name == "degree-triples":
        return degree_triples
    raise ValueError(f"unknown survey {name!r}; expected one of {SURVEYS}")


def run_surveys(
    partitions: Sequence[DodgrPartition],
    names: Sequence[str] = ("count",),
    *,
    algorithm: str = "push-pull",
    cache_capacity: int = DEFAULT_CACHE_CAPACITY,
    flush_threshold: int = DEFAULT_FLUSH_THRESHOLD,
    strict_pseudocode: bool = False,
) -> SurveyRun:
    """Run the named surveys in one enumeration pass and gather their snapshots.

    The ``count`` snapshot is ``[("triangles", n)]`` with ``n`` obtained by
    an all-reduce of per-rank tallies.
    """
    n = len(partitions)
    comm = Comm(n, flush_threshold)
    names = list(dict.fromkeys(names))
    fns: list[Callable] = []
    per_rank: list[list] = [[] for _ in range(n)]
    sets: dict[str, CountingSet] = {}
    tallies: list[_Tally] | None = None
    for name in names:
        if name == "count":
            tallies = [_Tally() for _ in range(n)]
            fns.append(count_triangles)
            for r in range(n):
                per_rank[r].append(tallies[r])
        else:
            fns.append(_callback_for(name, strict_pseudocode))
            cs = sets[name] = CountingSet(comm, cache_capacity)
            for r in range(n):
                per_rank[r].append(cs.handles[r])
    survey = TriangleSurvey(comm, partitions)

    if len(fns) == 1:
        callback = fns[0]
        states = [s[0] for s in per_rank]
    else:
        callback = _FusedSurvey(names, strict_pseudocode)
        slots = ["count", *SURVEYS[1:]]
        states = []
        for r in range(n):
            by_name = dict(zip(names, per_rank[r]))
            states.append(tuple(by_name.get(name) for name in slots))

    stats = survey.run(callback, states, algorithm)
    for cs in sets.values():
        cs.flush()
    comm.barrier()

    snapshots: dict[str, list[tuple]] = {}
    for name in names:
        if name == "count":
            total = comm.all_reduce_sum([t.n for t in tallies])[0]
            snapshots[name] = [("triangles", total)]
        else:
            snapshots[name] = sets[name].snapshot()
    return SurveyRun(snapshots, stats, stats.triangles_found)


def snapshot_to_csv(name: str, snapshot: list[tuple], time_unit: str | None = None) -> str:
    if name == "closure-times":
        header = "open_bin,close_bin,count"
        if time_unit:
            header += f"\ntime unit: {time_unit}"
        return snapshot_csv(snapshot, render=render_bin, header=header)
    return snapshot_csv(snapshot)


def close_time_marginal(snapshot: list[tuple]) -> list[tuple[int, int]]:
    """Per-close-bin totals of a closure-times joint snapshot."""
    marginal: dict[int, int] = {}
    for (_, close_bin), count in snapshot:
        marginal[close_bin] = marginal.get(close_bin, 0) + count
    return sorted(marginal.items())


def survey_count(partitions, **kw) -> int:
    return run_surveys(partitions, ["count"], **kw).snapshots["count"][0][1]


def survey_max_edge_label(partitions, **kw) -> list[tuple]:
    return run_surveys(partitions, ["max-edge-label"], **kw).snapshots["max-edge-label"]


def survey_closure_times(partitions, **kw) -> tuple[list[tuple], list[tuple[int, int]]]:
    snap = run_surveys(partitions, ["closure-times"], **kw).snapshots["closure-times"]
    return snap, close_time_marginal(snap)


def survey_label_triples(partitions, **kw) -> list[tuple]:
    return run_surveys(partitions, ["label-triples"], **kw).snapshots["label-triples"]


def survey_degree_triples(partitions, **kw) -> list[tuple]:
    return run_surveys(partitions, ["degree-triples"], **kw).snapshots["degree-triples"]
