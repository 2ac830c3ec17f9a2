"""Distributed containers layered on :class:`~tripoll.comm.Comm`.

``DistMap`` places each key on ``owner(key) = hash(key) % num_ranks``.
``CountingSet`` is a distributed multiset whose increments are first
aggregated in a bounded per-rank cache; evicted or flushed entries travel
to the owner as (key, delta) pairs.
"""

from __future__ import annotations

import hashlib
import heapq
from typing import Callable, Hashable

from .comm import Comm, CommError, RankContext
from .serialize import dumps

__all__ = [
    "DEFAULT_CACHE_CAPACITY",
    "CountingSet",
    "DistMap",
    "key_hash",
    "mix64",
    "snapshot_csv",
]

DEFAULT_CACHE_CAPACITY = 1 << 16

# evicted entries are batched per owner and shipped once this many accumulate
EVICTION_BATCH = 1024

MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a seedless 64-bit avalanche mix."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def key_hash(key: Hashable) -> int:
    """Stable 64-bit hash, identical across ranks, runs and interpreters."""
    if type(key) is int:
        return mix64(key)
    digest = hashlib.blake2b(dumps(key), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class DistMap:
    """Key-partitioned map.  Every rank's store is a plain dict."""

    def __init__(self, comm: Comm):
        self.comm = comm
        self.stores: list[dict] = [{} for _ in range(comm.num_ranks)]
        self.missing_visits = [0] * comm.num_ranks
        self._visitors: list[Callable] = []
        self._h_insert = comm.register(self._on_insert)
        self._h_visit = comm.register(self._on_visit)

    def owner(self, key) -> int:
        return key_hash(key) % self.comm.num_ranks

    def register_visitor(self, fn: Callable) -> int:
        """``fn(ctx, key, value, *args) -> new value or None`` (None keeps the value)."""
        if self.comm.started:
            raise CommError("visitors must be registered before the engine starts")
        self._visitors.append(fn)
        return len(self._visitors) - 1

    def insert(self, ctx: RankContext, key, value) -> None:
        ctx.send(self.owner(key), self._h_insert, key, value)

    def visit(self, ctx: RankContext, key, visitor_id: int, *args, default=None, create: bool = False) -> None:
        ctx.send(self.owner(key), self._h_visit, key, visitor_id, create, default, args)

    def local(self, rank: int) -> dict:
        return self.stores[rank]

    def _on_insert(self, ctx: RankContext, key, value) -> None:
        self.stores[ctx.rank][_hashable(key)] = value

    def _on_visit(self, ctx: RankContext, key, visitor_id, create, default, args) -> None:
        key = _hashable(key)
        store = self.stores[ctx.rank]
        if key not in store:
            if not create:
                self.missing_visits[ctx.rank] += 1
                return
            store[key] = default
        result = self._visitors[visitor_id](ctx, key, store[key], *args)
        if result is not None:
            store[key] = result


def _hashable(key):
    # tuple keys come back from the wire as tuples already; lists would not be hashable
    if type(key) is list:
        return tuple(_hashable(k) for k in key)
    return key


class _LocalCounter:
    """One rank's view of a :class:`CountingSet`: what a survey callback increments.

    When the cache is full, a new key evicts the entry with the smallest
    pending delta.  The min-heap is only built at the first eviction and
    is maintained lazily: heap deltas may lag the true (larger) deltas and
    are corrected when popped, so cache hits stay plain dict updates.
    Evicted entries wait in a small outbox and travel in batches.
    """

    __slots__ = ("_cs", "ctx", "pending", "_heap", "_seq", "evictions", "_outbox", "_outbox_len")

    def __init__(self, cs: CountingSet, ctx: RankContext):
        self._cs = cs
        self.ctx = ctx
        self.pending: dict = {}
        self._heap: list | None = None
        self._seq = 0
        self.evictions = 0
        self._outbox: dict[int, tuple[list, list]] = {}
        self._outbox_len = 0

    def increment(self, key, by: int = 1) -> None:
        pending = self.pending
        if key in pending:
            pending[key] += by
            return
        if len(pending) >= self._cs.cache_capacity:
            self._evict()
        pending[key] = by
        if self._heap is not None:
            self._seq += 1
            heapq.heappush(self._heap, (by, self._seq, key))

    def _evict(self) -> None:
        pending = self.pending
        heap = self._heap
        if heap is None:
            heap = self._heap = [(d, i, k) for i, (k, d) in enumerate(pending.items())]
            self._seq = len(heap)
            heapq.heapify(heap)
        while True:
            delta, _, key = heapq.heappop(heap)
            actual = pending.get(key)
            if actual is None:
                continue
            if actual == delta:
                break
            self._seq += 1
            heapq.heappush(heap, (actual, self._seq, key))
        del pending[key]
        self.evictions += 1
        keys, deltas = self._outbox.setdefault(self._cs.owner(key), ([], []))
        keys.append(key)
        deltas.append(delta)
        self._outbox_len += 1
        if self._outbox_len >= EVICTION_BATCH:
            self._ship_outbox()

    def _ship_outbox(self) -> None:
        outbox = self._outbox
        self._outbox = {}
        self._outbox_len = 0
        for dest in sorted(outbox):
            keys, deltas = outbox[dest]
            self._cs._ship(self.ctx, dest, keys, deltas)

    def has_pending(self) -> bool:
        return bool(self.pending) or self._outbox_len > 0

    def flush(self) -> None:
        owner = self._cs.owner
        outbox = self._outbox
        for key, delta in self.pending.items():
            keys, deltas = outbox.setdefault(owner(key), ([], []))
            keys.append(key)
            deltas.append(delta)
        self.pending.clear()
        self._heap = None
        self._ship_outbox()


class CountingSet:
    def __init__(self, comm: Comm, cache_capacity: int = DEFAULT_CACHE_CAPACITY):
        if cache_capacity < 1:
            raise ValueError("cache_capacity must be >= 1")
        self.comm = comm
        self.cache_capacity = cache_capacity
        self.counts: list[dict] = [{} for _ in range(comm.num_ranks)]
        self.handles = [_LocalCounter(self, ctx) for ctx in comm.ranks]
        self.messages_by_key: dict = {}
        self._h_merge = comm.register(self._on_merge)

    def owner(self, key) -> int:
        return key_hash(key) % self.comm.num_ranks

    def increment(self, rank: int, key, by: int = 1) -> None:
        self.handles[rank].increment(key, by)

    def flush(self) -> None:
        """Ship every cached delta.  A ``barrier`` must follow before reading."""
        for h in self.handles:
            h.flush()

    def flush_and_barrier(self) -> None:
        self.flush()
        self.comm.barrier()

    def _ship(self, ctx: RankContext, dest: int, keys: list, deltas: list) -> None:
        ctx.send(dest, self._h_merge, keys, deltas)

    def _on_merge(self, ctx: RankContext, keys: list, deltas: list) -> None:
        counts = self.counts[ctx.rank]
        tally = self.messages_by_key
        for key, delta in zip(keys, deltas):
            key = _hashable(key)
            counts[key] = counts.get(key, 0) + delta
            tally[key] = tally.get(key, 0) + 1

    def snapshot(self) -> list[tuple]:
        """Sorted global ``(key, count)`` listing; requires flush + barrier first."""
        if any(h.has_pending() for h in self.handles):
            raise CommError("counting set read before flush + barrier")
        if not self.comm.quiescent():
            raise CommError("counting set read while messages are in flight")
        merged = []
        for store in self.counts:
            merged.extend((k, c) for k, c in store.items() if c)
        merged.sort(key=_sort_key)
        return merged


def _sort_key(item):
    return _orderable(item[0])


def _orderable(key):
    # keys of one survey are homogeneous; a type rank keeps mixed keys sortable
    if type(key) is tuple:
        return (3, tuple(_orderable(k) for k in key))
    if key is None:
        return (0, 0)
    if isinstance(key, (int, float)):
        return (1, key)
    return (2, str(key))


def snapshot_csv(snapshot: list[tuple], render: Callable | None = None, header: str | None = None) -> str:
    """``key_field[,key_field...],count`` per line, in snapshot order."""
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    for key, count in snapshot:
        fields = key if type(key) is tuple else (key,)
        if render is not None:
            fields = tuple(render(f) for f in fields)
        lines.append(",".join(_csv_field(f) for f in fields) + f",{count}")
    return "".join(line + "\n" for line in lines)


def _csv_field(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    if any(c in text for c in ',"\n\r'):
        return '"' + text.replace('"', '""') + '"'
    return text
