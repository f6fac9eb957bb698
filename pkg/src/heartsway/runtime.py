"""Clocks and the engine event loop.

The orchestrator, replay driver, and simulated sensors all schedule work
through one EventLoop.  Under a SystemClock the loop blocks on a condition
variable; under a VirtualClock it jumps straight to the next timer, so a
ten-minute session plays out in milliseconds of wall time.  Handlers run on
the loop's thread only — cross-thread callers use post().
"""

from __future__ import annotations

import heapq
import itertools
import threading
import time
from collections import deque
from typing import Callable, Optional, Protocol


class Clock(Protocol):
    def now_ms(self) -> int: ...


class SystemClock:
    """Wall-clock epoch milliseconds."""

    def now_ms(self) -> int:
        return int(time.time() * 1000)


class VirtualClock:
    """Manually advanced clock for simulation and tests."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def advance_to(self, t_ms: int) -> None:
        if t_ms < self._now:
            raise ValueError("virtual time cannot go backwards")
        self._now = t_ms


class Timer:
    __slots__ = ("t_ms", "fn", "cancelled")

    def __init__(self, t_ms: int, fn: Callable[[], None]):
        self.t_ms = t_ms
        self.fn = fn
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class EventLoop:
    """Single-consumer loop over timers and posted callbacks.

    Timers with equal deadlines run in scheduling order; posted callbacks
    run before any timer work at the same instant.  With a VirtualClock the
    loop is fully deterministic.
    """

    def __init__(self, clock: Clock):
        self.clock = clock
        self._virtual = isinstance(clock, VirtualClock)
        self._heap: list[tuple[int, int, Timer]] = []
        self._counter = itertools.count()
        self._posted: deque[Callable[[], None]] = deque()
        self._cv = threading.Condition()
        self._stopped = False

    def call_at(self, t_ms: int, fn: Callable[[], None]) -> Timer:
        timer = Timer(t_ms, fn)
        with self._cv:
            heapq.heappush(self._heap, (t_ms, next(self._counter), timer))
            self._cv.notify()
        return timer

    def call_later(self, delay_ms: int, fn: Callable[[], None]) -> Timer:
        return self.call_at(self.clock.now_ms() + delay_ms, fn)

    def post(self, fn: Callable[[], None]) -> None:
        """Thread-safe: enqueue fn to run on the loop thread."""
        with self._cv:
            self._posted.append(fn)
            self._cv.notify()

    def stop(self) -> None:
        with self._cv:
            self._stopped = True
            self._cv.notify()

    def run(self, until_ms: Optional[int] = None) -> None:
        """Process events until stopped.

        Virtual time additionally stops when the loop drains or the next
        timer lies beyond until_ms; that is how simulations end.
        """
        self._stopped = False
        while True:
            fn = None
            with self._cv:
                if self._stopped:
                    return
                if self._posted:
                    fn = self._posted.popleft()
                else:
                    deadline = self._peek_deadline()
                    if deadline is None:
                        if self._virtual:
                            return
                        self._cv.wait(timeout=0.5)
                        continue
                    now = self.clock.now_ms()
                    if self._virtual:
                        if until_ms is not None and deadline > until_ms:
                            return
                        if deadline > now:
                            self.clock.advance_to(deadline)
                    elif deadline > now:
                        self._cv.wait(timeout=(deadline - now) / 1000)
                        continue
                    fn = self._pop_due()
            if fn is not None:
                fn()

    def _peek_deadline(self) -> Optional[int]:
        while self._heap and self._heap[0][2].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0][0] if self._heap else None

    def _pop_due(self) -> Optional[Callable[[], None]]:
        while self._heap and self._heap[0][2].cancelled:
            heapq.heappop(self._heap)
        if self._heap and self._heap[0][0] <= self.clock.now_ms():
            _, _, timer = heapq.heappop(self._heap)
            return timer.fn
        return None

    def run_in_thread(self) -> threading.Thread:
        thread = threading.Thread(target=self.run, name="heartsway-loop", daemon=True)
        thread.start()
        return thread
