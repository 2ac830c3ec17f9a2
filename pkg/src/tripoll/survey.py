"""Triangle survey kernel: Push-Only and Push-Pull enumeration.

For each pivot ``p`` and each out-neighbour ``q`` the rank owning ``p``
either *pushes* the rest of ``p``'s out-list (the candidates ``r``) to
``Rank(q)``, or, when many local pivots point at the same ``q``, *pulls*
``q``'s out-list once and does the intersections locally.  Either way the
callback sees every triangle ``p <+ q <+ r`` exactly once together with
its six metadata values.
"""

from __future__ import annotations

import gc
import os
import time
from bisect import bisect_left
from operator import itemgetter
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

from .comm import Comm, CommStats, HandlerError, RankContext
from .containers import mix64
from .graph import DodgrPartition, MetaValue, vertex_owner

__all__ = [
    "PullDecision",
    "SurveyError",
    "SurveyStats",
    "TriangleMeta",
    "TriangleSurvey",
    "merge_intersect",
    "survey_push_only",
    "survey_push_pull",
]

ALGORITHMS = ("push", "push-pull")

# checks sortedness of merge inputs; O(n) per call, so off unless asked for
DEBUG = bool(os.environ.get("TRIPOLL_DEBUG"))


class SurveyError(RuntimeError):
    pass


class TriangleMeta(NamedTuple):
    p: int
    q: int
    r: int
    p_meta: MetaValue
    q_meta: MetaValue
    r_meta: MetaValue
    pq_meta: MetaValue
    pr_meta: MetaValue
    qr_meta: MetaValue
    p_deg: int
    q_deg: int
    r_deg: int


# C-level constructor; the generated NamedTuple __new__ is a Python function
_new_meta = tuple.__new__


class PullDecision(NamedTuple):
    target: int
    source_rank: int
    proposed_edges: int
    verdict: str  # "pull" or "push"


def merge_intersect(a: Sequence, b: Sequence, key: Callable | None = None) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)`` with ``a[i] == b[j]`` for two strictly increasing sequences.

    Walks both inputs simultaneously.  When one side is much shorter, its
    elements are instead located in the longer side by binary search
    starting at the last match position; that path is only taken when
    ``short * log2(long) <= len(a) + len(b)``, so the comparison count stays
    within O(len(a) + len(b)) either way.
    """
    if key is not None:
        a = [key(x) for x in a]
        b = [key(x) for x in b]
    if DEBUG:
        _check_sorted(a, "a")
        _check_sorted(b, "b")
    out = []
    na = len(a)
    nb = len(b)
    if not na or not nb:
        return out
    if na <= nb:
        if na * nb.bit_length() <= na + nb:
            return _search_intersect(a, b, False)
    elif nb * na.bit_length() <= na + nb:
        return _search_intersect(b, a, True)
    i = j = 0
    x = a[0]
    y = b[0]
    while True:
        if x < y:
            i += 1
            if i == na:
                break
            x = a[i]
        elif y < x:
            j += 1
            if j == nb:
                break
            y = b[j]
        else:
            out.append((i, j))
            i += 1
            j += 1
            if i == na or j == nb:
                break
            x = a[i]
            y = b[j]
    return out


def _search_intersect(short: Sequence, long: Sequence, swapped: bool) -> list[tuple[int, int]]:
    out = []
    lo = 0
    n = len(long)
    for i, x in enumerate(short):
        j = bisect_left(long, x, lo)
        if j == n:
            break
        if long[j] == x:
            out.append((j, i) if swapped else (i, j))
            lo = j + 1
        else:
            lo = j
    return out


def _check_sorted(seq: Sequence, name: str) -> None:
    for k in range(1, len(seq)):
        if not seq[k - 1] < seq[k]:
            raise AssertionError(f"merge input {name} not strictly increasing at index {k}")


class _LowKeys(dict):
    """Rank-local memo of the low 128 bits of an order key: ``mix64(v) << 64 | v``."""

    def __missing__(self, v: int) -> int:
        low = self[v] = (mix64(v) << 64) | v
        return low


@dataclass
class SurveyStats:
    algorithm: str
    num_ranks: int
    triangles_found: int = 0
    wedge_checks_issued: int = 0
    pulls_performed: int = 0
    pulls_per_rank: list[int] = field(default_factory=list)
    phases: dict[str, CommStats] = field(default_factory=dict)
    phase_times: dict[str, float] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def comm(self) -> CommStats:
        total = CommStats()
        for s in self.phases.values():
            total = total + s
        return total

    @property
    def payload_bytes(self) -> int:
        return self.comm.payload_bytes_sent


class TriangleSurvey:
    """Survey driver bound to one engine and one set of DODGr partitions.

    Handlers are registered at construction, so build any containers the
    callback uses on the same ``comm`` before the first ``run``.
    """

    def __init__(self, comm: Comm, partitions: Sequence[DodgrPartition]):
        if len(partitions) != comm.num_ranks:
            raise ValueError(f"{len(partitions)} partitions for {comm.num_ranks} ranks")
        for r, part in enumerate(partitions):
            if part.rank != r or part.num_ranks != comm.num_ranks:
                raise ValueError(f"partition {r} was built for rank {part.rank} of {part.num_ranks}")
        self.comm = comm
        self.partitions = list(partitions)
        n = comm.num_ranks
        self._low = [_LowKeys() for _ in range(n)]
        self._h_push = comm.register(self._on_push)
        self._h_dry_run = comm.register(self._on_dry_run)
        self._h_verdict = comm.register(self._on_push_verdict)
        self._h_pull = comm.register(self._on_pull)
        self.decisions: list[PullDecision] = []
        self._reset(None, None, "push")

    def _reset(self, callback, callback_state, algorithm) -> None:
        n = self.comm.num_ranks
        self._callback = callback
        self._batch = getattr(callback, "batch", None)
        self._states = list(callback_state) if callback_state is not None else [None] * n
        if len(self._states) != n:
            raise ValueError(f"callback_state needs one entry per rank ({n})")
        self._algorithm = algorithm
        self._triangles = [0] * n
        self._wedges = [0] * n
        self._pulls = [0] * n
        self._push_ok: list[set] = [set() for _ in range(n)]
        self._pulled_by: list[dict[int, list[int]]] = [{} for _ in range(n)]
        self._pivots: list[dict[int, list]] = [{} for _ in range(n)]
        self.decisions = []

    def run(self, callback: Callable, callback_state: Sequence | None = None, algorithm: str = "push-pull") -> SurveyStats:
        """Invoke ``callback(TriangleMeta, callback_state[rank])`` once per triangle.

        A callback with a ``batch`` attribute is instead handed each group of
        triangles sharing one wedge ``(p, q)`` in a single call::

            callback.batch(state, p, q, p_meta, q_meta, pq_meta, p_deg, q_deg,
                           rs, r_metas, pr_metas, qr_metas, r_degs)

        where the last five arguments are equal-length sequences, one entry
        per closing vertex ``r``.
        """
        if algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
        self._reset(callback, callback_state, algorithm)
        comm = self.comm
        stats = SurveyStats(algorithm=algorithm, num_ranks=comm.num_ranks)
        t_start = time.perf_counter()
        # the kernel allocates millions of short-lived acyclic tuples; cyclic GC passes are wasted work
        gc_was_enabled = gc.isenabled()
        gc.disable()
        try:
            if algorithm == "push":
                self._phase(stats, "push", self._push_phase, False)
            else:
                self._phase(stats, "dry_run", self._dry_run_phase)
                self._phase(stats, "push", self._push_phase, True)
                self._phase(stats, "pull", self._pull_phase)
        except HandlerError as exc:
            if isinstance(exc.__cause__, SurveyError):
                raise exc.__cause__ from exc
            raise SurveyError(str(exc)) from exc
        finally:
            if gc_was_enabled:
                gc.enable()
        stats.wall_time = time.perf_counter() - t_start
        stats.triangles_found = sum(self._triangles)
        stats.wedge_checks_issued = sum(self._wedges)
        stats.pulls_per_rank = list(self._pulls)
        stats.pulls_performed = sum(self._pulls)
        return stats

    def _phase(self, stats: SurveyStats, name: str, body: Callable, *args) -> None:
        before = self.comm.global_stats()
        t0 = time.perf_counter()
        for ctx in self.comm.ranks:
            body(ctx, *args)
        self.comm.barrier()
        stats.phase_times[name] = time.perf_counter() - t0
        stats.phases[name] = self.comm.global_stats() - before

    # -- push ------------------------------------------------------------------

    def _push_phase(self, ctx: RankContext, filtered: bool) -> None:
        n = ctx.num_ranks
        h_push = self._h_push
        push_ok = self._push_ok[ctx.rank]
        wedges = 0
        for rec in self.partitions[ctx.rank].vertices.values():
            ids = rec.ids
            k = len(ids)
            if k < 2:
                continue
            p, p_meta, p_deg, emeta, degs = rec.id, rec.meta, rec.degree, rec.emeta, rec.degs
            for i in range(k - 1):
                q = ids[i]
                if filtered and q not in push_ok:
                    continue
                j = i + 1
                ctx.send(vertex_owner(q, n), h_push, q, p, p_meta, p_deg, emeta[i], ids[j:], degs[j:], emeta[j:])
                wedges += k - j
        self._wedges[ctx.rank] += wedges

    def _on_push(self, ctx: RankContext, q, p, p_meta, p_deg, pq_meta, cand_ids, cand_degs, cand_metas) -> None:
        rank = ctx.rank
        rec = self.partitions[rank].vertices.get(q)
        if rec is None:
            raise SurveyError(f"push for vertex {q} reached rank {rank}, which does not own it")
        if self._algorithm == "push-pull" and ctx.source in self._pulled_by[rank].get(q, ()):
            raise SurveyError(f"rank {ctx.source} pushed to vertex {q} after its pull was accepted")
        if not rec.ids:
            return
        low = self._low[rank]
        cand_keys = [(d << 128) | low[r] for r, d in zip(cand_ids, cand_degs)]
        matches = merge_intersect(cand_keys, rec.keys)
        if not matches:
            return
        ids, vmeta, emeta, degs = rec.ids, rec.vmeta, rec.emeta, rec.degs
        q_meta, q_deg = rec.meta, rec.degree
        callback, state = self._callback, self._states[rank]
        batch = self._batch
        if batch is not None:
            ai, bj = zip(*matches)
            try:
                if len(ai) == 1:
                    j = bj[0]
                    batch(state, p, q, p_meta, q_meta, pq_meta, p_deg, q_deg,
                          (ids[j],), (vmeta[j],), (cand_metas[ai[0]],), (emeta[j],), (degs[j],))
                else:
                    g = itemgetter(*bj)
                    batch(state, p, q, p_meta, q_meta, pq_meta, p_deg, q_deg,
                          g(ids), g(vmeta), itemgetter(*ai)(cand_metas), g(emeta), g(degs))
            except Exception as exc:
                raise _callback_failure(rank, f"wedge p={p} q={q}", exc) from exc
        else:
            new, TM = _new_meta, TriangleMeta
            tri = None
            try:
                for i, j in matches:
                    tri = new(TM, (p, q, ids[j], p_meta, q_meta, vmeta[j], pq_meta, cand_metas[i], emeta[j], p_deg, q_deg, degs[j]))
                    callback(tri, state)
            except Exception as exc:
                raise _callback_failure(rank, tri, exc) from exc
        self._triangles[rank] += len(matches)

    # -- push vs pull dry-run -------------------------------------------------------

    def _dry_run_phase(self, ctx: RankContext) -> None:
        n = ctx.num_ranks
        tally: dict[int, int] = {}
        pivots = self._pivots[ctx.rank]
        for rec in self.partitions[ctx.rank].vertices.values():
            ids = rec.ids
            k = len(ids)
            for i in range(k - 1):
                q = ids[i]
                tally[q] = tally.get(q, 0) + (k - 1 - i)
                lst = pivots.get(q)
                if lst is None:
                    pivots[q] = [(rec, i)]
                else:
                    lst.append((rec, i))
        h = self._h_dry_run
        for q, count in tally.items():
            ctx.send(vertex_owner(q, n), h, q, count)

    def _on_dry_run(self, ctx: RankContext, q: int, proposed: int) -> None:
        rec = self.partitions[ctx.rank].vertices[q]
        # ties go to push: pulling an equal amount of data buys nothing
        if proposed > len(rec.ids):
            self._pulled_by[ctx.rank].setdefault(q, []).append(ctx.source)
            self.decisions.append(PullDecision(q, ctx.source, proposed, "pull"))
        else:
            self.decisions.append(PullDecision(q, ctx.source, proposed, "push"))
            ctx.send(ctx.source, self._h_verdict, q)

    def _on_push_verdict(self, ctx: RankContext, q: int) -> None:
        self._push_ok[ctx.rank].add(q)

    # -- pull --------------------------------------------------------------------

    def _pull_phase(self, ctx: RankContext) -> None:
        verts = self.partitions[ctx.rank].vertices
        h = self._h_pull
        for q, sources in self._pulled_by[ctx.rank].items():
            rec = verts[q]
            for src in sources:
                ctx.send(src, h, q, rec.meta, rec.degree, rec.ids, rec.degs, rec.emeta)

    def _on_pull(self, ctx: RankContext, q, q_meta, q_deg, r_ids, r_degs, qr_metas) -> None:
        rank = ctx.rank
        if q in self._push_ok[rank]:
            raise SurveyError(f"rank {rank} received a pull of vertex {q} it was told to push")
        self._pulls[rank] += 1
        low = self._low[rank]
        q_keys = [(d << 128) | low[r] for r, d in zip(r_ids, r_degs)]
        callback, state = self._callback, self._states[rank]
        batch = self._batch
        new, TM = _new_meta, TriangleMeta
        wedges = 0
        found = 0
        tri = None
        for prec, i in self._pivots[rank].get(q, ()):
            start = i + 1
            wedges += len(prec.ids) - start
            if not q_keys:
                continue
            matches = merge_intersect(prec.keys[start:], q_keys)
            if not matches:
                continue
            found += len(matches)
            ids, vmeta, emeta, degs = prec.ids, prec.vmeta, prec.emeta, prec.degs
            p, p_meta, p_deg, pq_meta = prec.id, prec.meta, prec.degree, emeta[i]
            if batch is not None:
                ai, bj = zip(*matches)
                try:
                    if len(ai) == 1:
                        j = start + ai[0]
                        batch(state, p, q, p_meta, q_meta, pq_meta, p_deg, q_deg,
                              (ids[j],), (vmeta[j],), (emeta[j],), (qr_metas[bj[0]],), (degs[j],))
                    else:
                        g = itemgetter(*map(start.__add__, ai))
                        batch(state, p, q, p_meta, q_meta, pq_meta, p_deg, q_deg,
                              g(ids), g(vmeta), g(emeta), itemgetter(*bj)(qr_metas), g(degs))
                except Exception as exc:
                    raise _callback_failure(rank, f"wedge p={p} q={q}", exc) from exc
                continue
            try:
                for a, b in matches:
                    j = start + a
                    tri = new(TM, (p, q, ids[j], p_meta, q_meta, vmeta[j], pq_meta, emeta[j], qr_metas[b], p_deg, q_deg, degs[j]))
                    callback(tri, state)
            except Exception as exc:
                raise _callback_failure(rank, tri, exc) from exc
        self._wedges[rank] += wedges
        self._triangles[rank] += found


def _callback_failure(rank: int, tri: TriangleMeta | str | None, exc: Exception) -> SurveyError:
    if isinstance(tri, str):
        where = tri
    else:
        where = f"triangle p={tri.p} q={tri.q} r={tri.r}" if tri is not None else "triangle assembly"
    return SurveyError(f"callback failed on {where} (rank {rank}): {type(exc).__name__}: {exc}")


def _one_shot(partitions, callback, callback_state, algorithm, comm) -> SurveyStats:
    if comm is None:
        comm = Comm(len(partitions))
    return TriangleSurvey(comm, partitions).run(callback, callback_state, algorithm)


def survey_push_only(partitions, callback, callback_state=None, *, comm: Comm | None = None) -> SurveyStats:
    return _one_shot(partitions, callback, callback_state, "push", comm)


def survey_push_pull(partitions, callback, callback_state=None, *, comm: Comm | None = None) -> SurveyStats:
    return _one_shot(partitions, callback, callback_state, "push-pull", comm)
