"""Discrete-event core: integer microsecond clock, ordered event queue, seeded randomness."""

import heapq
import zlib
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


@dataclass(order=False)
class SimEvent:
    fire_at: int
    kind: str = "event"
    payload: Any = None
    callback: Optional[Callable[..., None]] = None
    sequence: int = -1
    cancelled: bool = field(default=False, compare=False)


class Simulator:
    """Single-threaded event loop.

    Events with equal ``fire_at`` are delivered in insertion order, which is
    what keeps two runs with the same seed byte-identical.
    """

    def __init__(self):
        self.now = 0
        self._heap = []
        self._seq = 0
        self.scheduled = 0
        self.delivered = 0
        self.delivery_log = None  # set to a list to record (time, seq)
        self.post_event = None  # optional hook run after every delivery

    def schedule(self, event: SimEvent) -> SimEvent:
        if event.fire_at < self.now:
            raise SchedulingError(f"event {event.kind!r} at t={event.fire_at} is before now={self.now}")
        event.sequence = self._seq
        self._seq += 1
        self.scheduled += 1
        heapq.heappush(self._heap, (event.fire_at, event.sequence, event))
        return event

    def at(self, t: int, fn: Callable, *args, kind: str = "call") -> SimEvent:
        return self.schedule(SimEvent(int(t), kind, args, fn))

    def after(self, delay: int, fn: Callable, *args, kind: str = "call") -> SimEvent:
        return self.at(self.now + int(delay), fn, *args, kind=kind)

    def cancel(self, event: SimEvent) -> None:
        event.cancelled = True

    def pending(self) -> int:
        return len(self._heap)

    def _deliver(self, event: SimEvent) -> None:
        self.now = event.fire_at
        self.delivered += 1
        if self.delivery_log is not None:
            self.delivery_log.append((event.fire_at, event.sequence, event.kind))
        if event.cancelled or event.callback is None:
            return
        args = event.payload if isinstance(event.payload, tuple) else (event.payload,)
        event.callback(*args)
        if self.post_event is not None:
            self.post_event()

    def run_until(self, t: int) -> int:
        """Deliver every event with fire_at <= t; returns how many were delivered."""
        count = 0
        heap = self._heap
        while heap and heap[0][0] <= t:
            _, _, ev = heapq.heappop(heap)
            self._deliver(ev)
            count += 1
        if t > self.now:
            self.now = t
        return count

    def run(self, stop: Optional[Callable[[], bool]] = None) -> int:
        """Deliver events until the queue drains or ``stop()`` turns true."""
        count = 0
        heap = self._heap
        while heap:
            _, _, ev = heapq.heappop(heap)
            self._deliver(ev)
            count += 1
            if stop is not None and stop():
                break
        return count


class RandomSource:
    """Named, independent numpy PCG64 streams derived from one 64-bit seed.

    Each consumer asks for its own stream by name so that adding draws in one
    component never shifts the samples another component sees.
    """

    algorithm = "numpy PCG64 via SeedSequence(seed, crc32(name))"

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._streams = {}

    def stream(self, name: str) -> np.random.Generator:
        gen = self._streams.get(name)
        if gen is None:
            ss = np.random.SeedSequence([self.seed, zlib.crc32(name.encode())])
            gen = np.random.Generator(np.random.PCG64(ss))
            self._streams[name] = gen
        return gen
