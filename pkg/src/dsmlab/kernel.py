"""Deterministic discrete-event kernel: virtual clock, ordered event queue,
seeded randomness, and a replayable line-oriented event log."""

from __future__ import annotations

import hashlib
import heapq
import itertools
import queue
import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .topology import NodeRef


class EventKind(Enum):
    NODE_UP = 0
    NODE_DOWN = 1
    LINK_UP = 2
    LINK_DOWN = 3
    SUBNET_POWER_ON = 4
    SUBNET_POWER_OFF = 5


# Rank bands for same-timestamp ordering: scenario events apply before module
# timers, timers before message deliveries, metrics last.
RANK_TOPOLOGY_BASE = 0          # + EventKind.value
RANK_GOSSIP = 10
RANK_DHT_MAINT = 11
RANK_SM = 12
RANK_SNC = 13
RANK_DELIVERY = 20
RANK_METRICS = 30

LINK_KINDS = (EventKind.LINK_UP, EventKind.LINK_DOWN)
SUBNET_KINDS = (EventKind.SUBNET_POWER_ON, EventKind.SUBNET_POWER_OFF)


@dataclass(frozen=True)
class NetEvent:
    """Scheduled topology or subnet-power change.

    target is a NodeRef for node kinds, a (a, b) pair for link kinds, and a
    subnet id for power kinds.
    """

    time: int
    kind: EventKind
    target: NodeRef | int | tuple[NodeRef, NodeRef]

    def target_key(self) -> tuple[int, ...]:
        if isinstance(self.target, tuple):
            return tuple(self.target)
        return (self.target,)


class MonotonicityError(ValueError):
    """Raised when scheduling an event earlier than the current virtual time."""


class Cancellable:
    __slots__ = ("cancelled",)

    def __init__(self) -> None:
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class SimKernel:
    """Single-threaded event kernel; all module state is mutated from inside
    event callbacks, never concurrently.

    External commands cross in through `command_queue` (a thread-safe queue of
    zero-argument callables) and are drained between events.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self.now = 0
        self.log_records: list[str] = []
        self._heap: list[tuple[int, int, tuple[int, ...], int, Callable[[], None], Cancellable]] = []
        self._seq = itertools.count()
        self._rngs: dict[str, random.Random] = {}
        self._event_handler: Callable[[NetEvent], None] | None = None
        self.command_queue: "queue.Queue[Callable[[], None]]" = queue.Queue()
        self._log_listeners: list[Callable[[str], None]] = []

    # -- randomness ---------------------------------------------------------

    def rng(self, name: str) -> random.Random:
        """Derived sub-stream keyed by module name; stable across platforms."""
        if name not in self._rngs:
            digest = hashlib.sha256(f"{self.seed}/{name}".encode()).digest()
            self._rngs[name] = random.Random(int.from_bytes(digest[:8], "big"))
        return self._rngs[name]

    # -- logging ------------------------------------------------------------

    def log(self, module: str, event: str, details: str) -> None:
        record = f"{self.now} | {module} | {event} | {details}"
        self.log_records.append(record)
        for listener in self._log_listeners:
            listener(record)

    def add_log_listener(self, fn: Callable[[str], None]) -> None:
        self._log_listeners.append(fn)

    # -- scheduling ---------------------------------------------------------

    def set_event_handler(self, fn: Callable[[NetEvent], None]) -> None:
        self._event_handler = fn

    def schedule(self, event: NetEvent) -> None:
        """Enqueue a NetEvent; equal times are tie-broken by (kind rank,
        target, insertion sequence)."""
        if event.time < self.now:
            raise MonotonicityError(
                f"event at t={event.time} is in the past (now={self.now})")
        rank = RANK_TOPOLOGY_BASE + event.kind.value
        self._push(event.time, rank, event.target_key(),
                   lambda: self._apply_event(event), Cancellable())

    def call_at(self, t: int, rank: int, key: tuple[int, ...],
                fn: Callable[[], None]) -> Cancellable:
        if t < self.now:
            raise MonotonicityError(f"call_at t={t} is in the past (now={self.now})")
        handle = Cancellable()
        self._push(t, rank, key, fn, handle)
        return handle

    def every(self, period: int, rank: int, key: tuple[int, ...],
              fn: Callable[[], None], start: int | None = None) -> Cancellable:
        """Repeating timer; first firing at `start` (default: one period in)."""
        handle = Cancellable()
        first = self.now + period if start is None else start

        def tick() -> None:
            if handle.cancelled:
                return
            fn()
            if not handle.cancelled:
                self._push(self.now + period, rank, key, tick, handle)

        self._push(first, rank, key, tick, handle)
        return handle

    def _push(self, t: int, rank: int, key: tuple[int, ...],
              fn: Callable[[], None], handle: Cancellable) -> None:
        heapq.heappush(self._heap, (t, rank, key, next(self._seq), fn, handle))

    def _apply_event(self, event: NetEvent) -> None:
        if self._event_handler is not None:
            self._event_handler(event)

    # -- execution ----------------------------------------------------------

    def pending(self) -> int:
        return sum(1 for entry in self._heap if not entry[5].cancelled)

    def next_time(self) -> int | None:
        while self._heap and self._heap[0][5].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0][0] if self._heap else None

    def step(self) -> list[str]:
        """Process the single next queue entry; returns records it emitted."""
        while self._heap:
            t, _rank, _key, _seq, fn, handle = heapq.heappop(self._heap)
            if handle.cancelled:
                continue
            self.now = t
            before = len(self.log_records)
            fn()
            return self.log_records[before:]
        return []

    def run_until(self, t: int) -> list[str]:
        """Replay events up to and including virtual time t; returns the full
        append-only log. An empty queue just advances the clock."""
        if t < self.now:
            raise MonotonicityError(f"run_until t={t} < now={self.now}")
        while True:
            self.drain_commands()
            while self._heap and self._heap[0][5].cancelled:
                heapq.heappop(self._heap)
            if not self._heap or self._heap[0][0] > t:
                break
            self.step()
        self.now = t
        return self.log_records

    def drain_commands(self) -> None:
        while True:
            try:
                fn = self.command_queue.get_nowait()
            except queue.Empty:
                return
            fn()
