"""Simulated asynchronous RPC over ``N`` ranks living in one process.

Ranks send fire-and-forget messages: a registered handler id plus
serialized arguments.  Envelopes are appended to a per-destination send
buffer and the buffer is shipped as a single packet once it would exceed
the flush threshold.  Delivery runs the handler on the destination rank,
one handler at a time per rank.  ``barrier`` drives the system to
quiescence, so handlers may freely send further messages.

Top-level per-rank control flow is written by the driver, e.g.::

    for ctx in comm.ranks:
        ctx.send(dest, hid, payload)
    comm.barrier()
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass, fields
from typing import Callable, Sequence

from .serialize import SerializationError, dumps, loads

__all__ = [
    "DEFAULT_FLUSH_THRESHOLD",
    "Comm",
    "CommError",
    "CommStats",
    "HandlerError",
    "RankContext",
]

DEFAULT_FLUSH_THRESHOLD = 64 * 1024

# envelope header: handler id, payload length
_HEADER = struct.Struct("<II")
_RESERVED_BASE = 0xFFFF_FF00
_H_REDUCE_CONTRIB = _RESERVED_BASE
_H_REDUCE_RESULT = _RESERVED_BASE + 1


class CommError(RuntimeError):
    """Misuse of the engine: late registration, barrier from a handler, ..."""


class HandlerError(RuntimeError):
    """A handler raised while being executed on some rank."""

    def __init__(self, rank: int, source: int, handler: str, cause: BaseException):
        super().__init__(
            f"handler {handler!r} failed on rank {rank} (message from rank {source}): "
            f"{type(cause).__name__}: {cause}"
        )
        self.rank = rank
        self.source = source
        self.handler = handler


@dataclass
class CommStats:
    messages_sent: int = 0
    payload_bytes_sent: int = 0
    flushes: int = 0
    messages_delivered: int = 0
    remote_messages_sent: int = 0
    remote_payload_bytes_sent: int = 0

    def __add__(self, other: CommStats) -> CommStats:
        return CommStats(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def __sub__(self, other: CommStats) -> CommStats:
        return CommStats(*(getattr(self, f.name) - getattr(other, f.name) for f in fields(self)))

    def copy(self) -> CommStats:
        return CommStats(*(getattr(self, f.name) for f in fields(self)))

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class RankContext:
    """Handle a rank's code uses to talk to the engine.

    During handler execution ``source`` is the rank that sent the message
    being processed; at top level it is ``None``.
    """

    __slots__ = ("rank", "comm", "source")

    def __init__(self, rank: int, comm: Comm):
        self.rank = rank
        self.comm = comm
        self.source: int | None = None

    @property
    def num_ranks(self) -> int:
        return self.comm.num_ranks

    def send(self, dest: int, handler_id: int, *args) -> None:
        self.comm.send(self.rank, dest, handler_id, *args)

    def __repr__(self) -> str:
        return f"RankContext(rank={self.rank})"


class Comm:
    def __init__(self, num_ranks: int, flush_threshold: int = DEFAULT_FLUSH_THRESHOLD):
        if num_ranks < 1:
            raise ValueError("num_ranks must be >= 1")
        if flush_threshold < 1:
            raise ValueError("flush_threshold must be positive")
        self.num_ranks = num_ranks
        self.flush_threshold = flush_threshold
        self.ranks = [RankContext(r, self) for r in range(num_ranks)]
        self._handlers: list[list[Callable]] = [[] for _ in range(num_ranks)]
        self._started = False
        self._failed: BaseException | None = None
        self._buffers = [[bytearray() for _ in range(num_ranks)] for _ in range(num_ranks)]
        self._inbox: list[deque] = [deque() for _ in range(num_ranks)]
        self._pending = 0  # packets sitting in inboxes
        self._stats = [CommStats() for _ in range(num_ranks)]
        self._in_handler = False
        self._reduce_inbox: list[list] = [[] for _ in range(num_ranks)]
        self._reduce_result: list = [None] * num_ranks

    # -- registration -----------------------------------------------------

    def register(self, handler: Callable) -> int:
        """Register ``handler`` on every rank and return its id."""
        ids = {self.register_on(r, handler) for r in range(self.num_ranks)}
        (hid,) = ids
        return hid

    def register_on(self, rank: int, handler: Callable) -> int:
        if self._started:
            raise CommError("handlers must be registered before the engine starts")
        table = self._handlers[rank]
        table.append(handler)
        return len(table) - 1

    def start(self) -> None:
        """Freeze registrations after checking every rank registered the same handlers."""
        if self._started:
            return
        reference = [_handler_name(h) for h in self._handlers[0]]
        for r in range(1, self.num_ranks):
            names = [_handler_name(h) for h in self._handlers[r]]
            if len(names) != len(reference):
                raise CommError(
                    f"registration count mismatch: rank 0 has {len(reference)} handlers, "
                    f"rank {r} has {len(names)}"
                )
            if names != reference:
                slot = next(i for i, (a, b) in enumerate(zip(reference, names)) if a != b)
                raise CommError(
                    f"registration order mismatch at id {slot}: "
                    f"rank 0 has {reference[slot]}, rank {r} has {names[slot]}"
                )
        self._started = True

    @property
    def started(self) -> bool:
        return self._started

    def quiescent(self) -> bool:
        """True when no message is buffered or queued anywhere."""
        return not self._pending and not any(b for row in self._buffers for b in row)

    @property
    def in_handler(self) -> bool:
        return self._in_handler

    # -- messaging --------------------------------------------------------

    def send(self, src: int, dest: int, handler_id: int, *args) -> None:
        if not self._started:
            self.start()
        self._check_alive()
        if not 0 <= dest < self.num_ranks:
            raise CommError(f"destination rank {dest} out of range")
        if handler_id < _RESERVED_BASE and not 0 <= handler_id < len(self._handlers[dest]):
            raise CommError(f"unknown handler id {handler_id}")
        try:
            payload = dumps(args)
        except SerializationError as exc:
            self._failed = exc
            raise SerializationError(
                f"rank {src} -> rank {dest}, handler {handler_id}: {exc}"
            ) from exc
        n = len(payload)
        st = self._stats[src]
        st.messages_sent += 1
        st.payload_bytes_sent += n
        if src != dest:
            st.remote_messages_sent += 1
            st.remote_payload_bytes_sent += n
        buf = self._buffers[src][dest]
        size = _HEADER.size + n
        flushed = False
        if buf and len(buf) + size > self.flush_threshold:
            self._flush(src, dest)
            flushed = True
        buf += _HEADER.pack(handler_id, n)
        buf += payload
        if len(buf) >= self.flush_threshold:
            self._flush(src, dest)
            flushed = True
        if flushed and not self._in_handler:
            # top-level sends make progress on flush, as a polling runtime would
            self._progress()

    def _flush(self, src: int, dest: int) -> None:
        buf = self._buffers[src][dest]
        if not buf:
            return
        self._inbox[dest].append((src, bytes(buf)))
        self._pending += 1
        buf.clear()
        self._stats[src].flushes += 1

    def _flush_all(self) -> None:
        for src in range(self.num_ranks):
            for dest in range(self.num_ranks):
                if self._buffers[src][dest]:
                    self._flush(src, dest)

    def _progress(self) -> None:
        """Deliver every packet currently queued; handlers' sends stay buffered."""
        while self._pending:
            for dest in range(self.num_ranks):
                inbox = self._inbox[dest]
                while inbox:
                    src, packet = inbox.popleft()
                    self._pending -= 1
                    self._deliver(dest, src, packet)

    def _deliver(self, dest: int, src: int, packet: bytes) -> None:
        ctx = self.ranks[dest]
        table = self._handlers[dest]
        view = memoryview(packet)
        offset = 0
        end = len(packet)
        st = self._stats[dest]
        self._in_handler = True
        ctx.source = src
        try:
            while offset < end:
                hid, n = _HEADER.unpack_from(view, offset)
                offset += _HEADER.size
                args = loads(view[offset : offset + n])
                offset += n
                st.messages_delivered += 1
                if hid >= _RESERVED_BASE:
                    self._internal(ctx, hid, args)
                    continue
                handler = table[hid]
                try:
                    handler(ctx, *args)
                except HandlerError:
                    raise
                except Exception as exc:
                    err = HandlerError(dest, src, _handler_name(handler), exc)
                    self._failed = err
                    raise err from exc
        finally:
            self._in_handler = False
            ctx.source = None

    def _check_alive(self) -> None:
        if self._failed is not None:
            raise CommError(f"engine aborted earlier: {self._failed}")

    # -- collectives ------------------------------------------------------

    def barrier(self) -> None:
        """Return once every buffered and in-flight message has been handled."""
        if self._in_handler:
            raise CommError("barrier() called from inside a handler")
        if not self._started:
            self.start()
        self._check_alive()
        while True:
            self._flush_all()
            if not self._pending:
                break
            self._progress()
        sent = sum(s.messages_sent for s in self._stats)
        delivered = sum(s.messages_delivered for s in self._stats)
        if sent != delivered:
            raise CommError(f"quiescence violated: {sent} sent, {delivered} delivered")

    def all_reduce_sum(self, values: Sequence):
        """Sum one contribution per rank; return the total as seen by each rank."""
        if self._in_handler:
            raise CommError("all_reduce_sum() called from inside a handler")
        if len(values) != self.num_ranks:
            raise ValueError(f"expected {self.num_ranks} contributions, got {len(values)}")
        for ctx, v in zip(self.ranks, values):
            ctx.send(0, _H_REDUCE_CONTRIB, v)
        self.barrier()
        total = sum(self._reduce_inbox[0])
        self._reduce_inbox[0] = []
        for dest in range(self.num_ranks):
            self.send(0, dest, _H_REDUCE_RESULT, total)
        self.barrier()
        result = list(self._reduce_result)
        self._reduce_result = [None] * self.num_ranks
        return result

    def _internal(self, ctx: RankContext, hid: int, args: tuple) -> None:
        if hid == _H_REDUCE_CONTRIB:
            self._reduce_inbox[ctx.rank].append(args[0])
        elif hid == _H_REDUCE_RESULT:
            self._reduce_result[ctx.rank] = args[0]
        else:
            raise CommError(f"unknown reserved handler {hid}")

    # -- accounting -------------------------------------------------------

    def stats(self, rank: int) -> CommStats:
        return self._stats[rank].copy()

    def global_stats(self) -> CommStats:
        total = CommStats()
        for s in self._stats:
            total = total + s
        return total


def _handler_name(h: Callable) -> str:
    return getattr(h, "__qualname__", None) or repr(h)
