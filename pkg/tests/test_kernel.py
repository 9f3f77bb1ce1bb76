"""Event kernel: ordering, timers, substreams, and the replay log."""

import hashlib
import random

import pytest

from dsmlab.kernel import (
    EventKind,
    MonotonicityError,
    NetEvent,
    RANK_DELIVERY,
    RANK_GOSSIP,
    RANK_METRICS,
    SimKernel,
)


def test_rng_substreams_match_hash_derivation():
    # independent oracle: the substream seed is the first 8 bytes of
    # sha256("<seed>/<name>"), so a fresh Random primed the same way must
    # produce the identical draw sequence
    kernel = SimKernel(seed=42)
    stream = kernel.rng("topo")
    derived = int.from_bytes(hashlib.sha256(b"42/topo").digest()[:8], "big")
    oracle = random.Random(derived)
    assert [stream.random() for _ in range(50)] == [oracle.random() for _ in range(50)]


def test_rng_substreams_are_independent():
    kernel = SimKernel(seed=7)
    a = kernel.rng("a")
    b = kernel.rng("b")
    seq_a = [a.getrandbits(32) for _ in range(20)]
    seq_b = [b.getrandbits(32) for _ in range(20)]
    assert seq_a != seq_b
    # same name, same seed, fresh kernel: identical stream
    again = SimKernel(seed=7).rng("a")
    assert [again.getrandbits(32) for _ in range(20)] == seq_a


def test_events_fire_in_time_rank_key_order():
    kernel = SimKernel(seed=1)
    fired = []
    kernel.call_at(10, RANK_METRICS, ("z",), lambda: fired.append("metrics"))
    kernel.call_at(10, RANK_GOSSIP, ("a",), lambda: fired.append("gossip"))
    kernel.call_at(10, RANK_DELIVERY, ("m",), lambda: fired.append("delivery"))
    kernel.call_at(5, RANK_METRICS, ("q",), lambda: fired.append("early"))
    kernel.run_until(10)
    assert fired == ["early", "gossip", "delivery", "metrics"]


def test_equal_time_rank_key_falls_back_to_schedule_order():
    kernel = SimKernel(seed=1)
    fired = []
    for tag in ("first", "second", "third"):
        kernel.call_at(3, RANK_DELIVERY, ("same",), lambda tag=tag: fired.append(tag))
    kernel.run_until(3)
    assert fired == ["first", "second", "third"]


def test_topology_events_precede_timers_at_same_time():
    """Scripted events apply before any protocol timer with the same stamp."""
    kernel = SimKernel(seed=1)
    fired = []
    kernel.call_at(500, RANK_GOSSIP, (0,), lambda: fired.append("gossip"))
    kernel.schedule(NetEvent(500, EventKind.NODE_DOWN, 3))
    kernel.set_event_handler(lambda ev: fired.append(ev.kind.name))
    kernel.run_until(500)
    assert fired == ["NODE_DOWN", "gossip"]


def test_power_on_sorts_before_power_off():
    kernel = SimKernel(seed=1)
    fired = []
    kernel.set_event_handler(lambda ev: fired.append(ev.kind.name))
    kernel.schedule(NetEvent(100, EventKind.SUBNET_POWER_OFF, 1))
    kernel.schedule(NetEvent(100, EventKind.SUBNET_POWER_ON, 2))
    kernel.run_until(100)
    assert fired == ["SUBNET_POWER_ON", "SUBNET_POWER_OFF"]


def test_past_scheduling_is_rejected():
    kernel = SimKernel(seed=1)
    kernel.run_until(50)
    with pytest.raises(MonotonicityError):
        kernel.call_at(49, RANK_DELIVERY, (0,), lambda: None)
    with pytest.raises(MonotonicityError):
        kernel.schedule(NetEvent(10, EventKind.NODE_UP, 0))


def test_every_first_fires_one_period_in():
    kernel = SimKernel(seed=1)
    stamps = []
    kernel.every(250, RANK_GOSSIP, ("tick",), lambda: stamps.append(kernel.now))
    kernel.run_until(1000)
    assert stamps == [250, 500, 750, 1000]


def test_cancellable_timer_does_not_fire():
    kernel = SimKernel(seed=1)
    fired = []
    handle = kernel.call_at(10, RANK_DELIVERY, (0,), lambda: fired.append(1))
    handle.cancel()
    kernel.run_until(20)
    assert fired == []


def test_run_until_advances_clock_even_when_idle():
    kernel = SimKernel(seed=1)
    kernel.run_until(12345)
    assert kernel.now == 12345


def test_log_format_and_listener():
    kernel = SimKernel(seed=1)
    seen = []
    kernel.add_log_listener(seen.append)
    kernel.run_until(42)
    kernel.log("mod", "EVENT", "k=v")
    assert kernel.log_records == ["42 | mod | EVENT | k=v"]
    assert seen == ["42 | mod | EVENT | k=v"]


def test_interleaved_timers_deterministic_across_runs():
    def run():
        kernel = SimKernel(seed=99)
        order = []
        rng = kernel.rng("jitter")
        for i in range(30):
            t = rng.randrange(1, 500)
            kernel.call_at(t, RANK_DELIVERY, (i,), lambda i=i: order.append((kernel.now, i)))
        kernel.run_until(500)
        return order

    assert run() == run()
