import random

import pytest

from tripoll.comm import DEFAULT_FLUSH_THRESHOLD, Comm, CommError, HandlerError


def test_handler_ids_are_dense_from_zero():
    c = Comm(2)
    assert c.register(lambda ctx: None) == 0
    assert c.register(lambda ctx: None) == 1


def test_registration_count_mismatch_is_detected():
    c = Comm(2)
    c.register_on(0, lambda ctx: None)
    with pytest.raises(CommError, match="count mismatch"):
        c.start()


def test_registration_order_mismatch_is_detected():
    def a(ctx):
        pass

    def b(ctx):
        pass

    c = Comm(2)
    c.register_on(0, a)
    c.register_on(0, b)
    c.register_on(1, b)
    c.register_on(1, a)
    with pytest.raises(CommError, match="order mismatch"):
        c.start()


def test_register_after_start_fails():
    c = Comm(1)
    c.start()
    with pytest.raises(CommError):
        c.register(lambda ctx: None)


def test_delivery_with_args():
    got = []
    c = Comm(4)
    h = c.register(lambda ctx, x, s: got.append((ctx.rank, ctx.source, x, s)))
    c.ranks[0].send(3, h, 42, "abc")
    c.barrier()
    assert got == [(3, 0, 42, "abc")]


def test_self_send_runs_and_is_counted():
    got = []
    c = Comm(2)
    h = c.register(lambda ctx, x: got.append(x))
    c.ranks[1].send(1, h, 7)
    c.barrier()
    assert got == [7]
    s = c.stats(1)
    assert s.messages_sent == 1 and s.messages_delivered == 1
    assert s.remote_messages_sent == 0


def test_empty_barrier_and_zero_counters():
    c = Comm(3)
    c.barrier()
    assert c.global_stats().as_dict() == {k: 0 for k in c.global_stats().as_dict()}


def test_one_send_counts_payload():
    c = Comm(2)
    h = c.register(lambda ctx, b: None)
    c.ranks[0].send(1, h, b"x" * 16)
    c.barrier()
    assert c.stats(0).payload_bytes_sent >= 16


def test_small_sends_aggregate_into_one_flush():
    c = Comm(2)
    h = c.register(lambda ctx, b: None)
    for _ in range(1000):
        c.ranks[0].send(1, h, b"0123456789abcdef")
    assert c.stats(0).flushes <= 1
    c.barrier()
    assert c.stats(1).messages_delivered == 1000


def test_tiny_threshold_flushes_every_message():
    c = Comm(2, flush_threshold=1)
    h = c.register(lambda ctx, x: None)
    for i in range(10):
        c.ranks[0].send(1, h, i)
    c.barrier()
    assert c.stats(0).flushes == 10


def test_chain_quiescence():
    order = []
    c = Comm(3)
    hc = c.register(lambda ctx: order.append("C"))
    hb = c.register(lambda ctx: (order.append("B"), ctx.send(2, hc)))
    ha = c.register(lambda ctx: (order.append("A"), ctx.send(1, hb)))
    c.ranks[0].send(0, ha)
    c.barrier()
    assert order == ["A", "B", "C"]
    assert c.quiescent()


def test_random_storm_ten_ranks():
    rng = random.Random(5)
    c = Comm(10, flush_threshold=512)
    received = [0] * 10

    def hop(ctx, ttl):
        received[ctx.rank] += 1
        if ttl:
            ctx.send(rng.randrange(10), h, ttl - 1)

    h = c.register(hop)
    for _ in range(5_000):
        c.ranks[rng.randrange(10)].send(rng.randrange(10), h, 1)
    c.barrier()
    g = c.global_stats()
    assert g.messages_sent == g.messages_delivered == sum(received) == 10_000


def test_fifo_per_source_destination():
    got = []
    c = Comm(2, flush_threshold=64)
    h = c.register(lambda ctx, i: got.append(i))
    for i in range(500):
        c.ranks[0].send(1, h, i)
    c.barrier()
    assert got == list(range(500))


@pytest.mark.parametrize("values,expected", [([1, 1, 1, 1], 4), ([7, 0, 0, 0], 7), ([1, 2, 3, 4, 5], 15)])
def test_all_reduce(values, expected):
    c = Comm(len(values))
    assert c.all_reduce_sum(values) == [expected] * len(values)


def test_barrier_inside_handler_is_rejected():
    c = Comm(1)
    h = c.register(lambda ctx: c.barrier())
    c.ranks[0].send(0, h)
    with pytest.raises(HandlerError) as info:
        c.barrier()
    assert isinstance(info.value.__cause__, CommError)


def test_handler_failure_aborts_engine():
    c = Comm(2)
    h = c.register(lambda ctx: 1 / 0)
    c.ranks[0].send(1, h)
    with pytest.raises(HandlerError, match="ZeroDivisionError"):
        c.barrier()
    with pytest.raises(CommError, match="aborted"):
        c.ranks[0].send(1, h)


def test_bad_destination_and_handler():
    c = Comm(2)
    h = c.register(lambda ctx: None)
    with pytest.raises(CommError):
        c.ranks[0].send(2, h)
    with pytest.raises(CommError):
        c.ranks[0].send(1, h + 5)


def test_default_threshold():
    assert DEFAULT_FLUSH_THRESHOLD == 64 * 1024
