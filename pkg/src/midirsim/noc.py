"""Deterministic discrete-event scheduler and interconnect model.

Single logical timeline: events execute in (time, seqno) order and the
seqno tie-break is assigned deterministically at scheduling time, so a
given scenario (including its seed) always produces the same execution.

The interconnect offers the correct-network abstraction: every message
is delivered unchanged after a finite, possibly jittered delay.  Loss and
corruption are outside the model.
"""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, Optional


@dataclass
class DelayModel:
    """Delivery delay per interconnect traversal, in cycles.

    `base` is shared with the cost model's remote-access constant so that
    latency arithmetic and access accounting use the same unit.  `jitter`
    adds a seeded uniform integer in [0, jitter]; `links` overrides the
    base per (src, dst) node pair.  Scripted adversarial skew is added on
    top by the fault layer.
    """

    base: int = 735
    jitter: int = 0
    links: dict = field(default_factory=dict)

    def sample(self, src, dst, rng: random.Random, extra: int = 0) -> int:
        d = self.links.get((src, dst), self.base)
        if self.jitter:
            d += rng.randint(0, self.jitter)
        return max(1, d + extra)


class Timer:
    __slots__ = ("fn", "cancelled")

    def __init__(self, fn):
        self.fn = fn
        self.cancelled = False

    def cancel(self):
        self.cancelled = True


@dataclass
class SimReport:
    final_time: int
    events_executed: int
    halted: str  # "quiescent" | "time_bound" | "predicate" | "event_cap"

    @property
    def quiescent(self) -> bool:
        return self.halted == "quiescent"


class Simulator:
    """Event loop.  The only mutator of model state."""

    def __init__(self, seed: int = 0, max_events: int = 2_000_000):
        self.now = 0
        self.rng = random.Random(seed)
        self.max_events = max_events
        self._heap: list = []
        self._seqno = 0
        self.executed = 0

    def at(self, delay: int, fn: Callable[[], None]) -> Timer:
        if delay < 0:
            raise ValueError("cannot schedule into the past")
        t = Timer(fn)
        self._seqno += 1
        heapq.heappush(self._heap, (self.now + delay, self._seqno, t))
        return t

    def pending(self) -> int:
        return sum(1 for _, _, t in self._heap if not t.cancelled)

    def step(self) -> Optional[int]:
        """Execute the next event; returns its time or None when drained."""
        while self._heap:
            when, _, timer = heapq.heappop(self._heap)
            if timer.cancelled:
                continue
            self.now = when
            self.executed += 1
            timer.fn()
            return when
        return None

    def run(self, until_time: Optional[int] = None,
            predicate: Optional[Callable[[], bool]] = None) -> SimReport:
        """Run until quiescence, a time bound, a predicate, or the event cap.

        Hitting the event cap is a diagnostic halt (suspected livelock) and
        is reported distinctly from quiescence.
        """
        while True:
            if predicate is not None and predicate():
                return SimReport(self.now, self.executed, "predicate")
            if self.executed >= self.max_events:
                return SimReport(self.now, self.executed, "event_cap")
            if not self._heap:
                return SimReport(self.now, self.executed, "quiescent")
            when = self._heap[0][0]
            while self._heap and self._heap[0][2].cancelled:
                heapq.heappop(self._heap)
            if not self._heap:
                return SimReport(self.now, self.executed, "quiescent")
            when = self._heap[0][0]
            if until_time is not None and when > until_time:
                self.now = until_time
                return SimReport(self.now, self.executed, "time_bound")
            self.step()
