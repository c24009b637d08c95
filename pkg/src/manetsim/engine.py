"""Single-queue discrete-event engine with a (time, sequence) total order."""

from __future__ import annotations

import enum
import heapq
from typing import Any, Callable, NamedTuple

SYSTEM = -1


class EventKind(enum.IntEnum):
    PACKET_ARRIVAL = 0
    MOBILITY_UPDATE = 1
    TRAFFIC_TICK = 2
    METRIC_EPOCH = 3
    MRP_EVALUATION = 4
    SIMULATION_END = 5
    TIMER = 6
    TX_READY = 7


class Event(NamedTuple):
    fire_at: float
    sequence: int
    kind: EventKind
    target: int
    handler: Callable[..., Any]
    args: tuple = ()


class SchedulingError(RuntimeError):
    pass


class Engine:
    """Global clock plus priority queue.

    Events at equal ``fire_at`` are dequeued in insertion order.
    """

    def __init__(self):
        self.now = 0.0
        self._queue: list[Event] = []
        self._seq = 0
        self.processed = 0

    def __len__(self) -> int:
        return len(self._queue)

    def schedule(self, event: Event) -> None:
        if event.fire_at < self.now:
            raise SchedulingError(
                f"cannot schedule event at t={event.fire_at!r} before clock t={self.now!r}"
            )
        heapq.heappush(self._queue, event)

    def at(self, fire_at: float, handler, *args, kind=EventKind.TIMER, target=SYSTEM) -> Event:
        """Create and schedule an event; returns it."""
        if fire_at < self.now:
            raise SchedulingError(
                f"cannot schedule event at t={fire_at!r} before clock t={self.now!r}"
            )
        ev = Event(fire_at, self._seq, kind, target, handler, args)
        self._seq += 1
        heapq.heappush(self._queue, ev)
        return ev

    def after(self, delay: float, handler, *args, kind=EventKind.TIMER, target=SYSTEM) -> Event:
        return self.at(self.now + delay, handler, *args, kind=kind, target=target)

    def next_sequence(self) -> int:
        s = self._seq
        self._seq += 1
        return s

    def peek_time(self) -> float | None:
        return self._queue[0].fire_at if self._queue else None

    def run(self, until: float) -> int:
        """Process every event with ``fire_at <= until``; return how many ran."""
        q = self._queue
        pop = heapq.heappop
        count = 0
        while q and q[0].fire_at <= until:
            ev = pop(q)
            self.now = ev.fire_at
            ev.handler(*ev.args)
            count += 1
        self.processed += count
        return count
