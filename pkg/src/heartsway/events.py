"""Engine event stream: ring-buffered, fan-out, strictly ordered.

Every observable engine occurrence (phase change, presence change, fired
beat/swing, cue lifecycle, page transfer, command audit, error) becomes one
numbered event.  Subscribers replay the buffered tail from any sequence
number and then live-tail; a subscriber that asks for history older than
the ring gets an explicit gap notice first.
"""

from __future__ import annotations

import logging
import queue
import threading
from collections import deque
from dataclasses import dataclass
from typing import Optional

LOG = logging.getLogger("heartsway.events")

RING_SIZE = 1000

# event kinds
PHASE_CHANGED = "PhaseChanged"
PRESENCE_CHANGED = "PresenceChanged"
BEAT_FIRED = "BeatFired"
SWING_FIRED = "SwingFired"
CUE_ISSUED = "CueIssued"
CUE_ACKED = "CueAcked"
PAGES_SENT = "PagesSent"
COMMAND_RECEIVED = "CommandReceived"
ERROR = "Error"
GAP_NOTICE = "GapNotice"


@dataclass(frozen=True)
class ApiEvent:
    seq: int
    t: int
    kind: str
    detail: dict

    def to_doc(self) -> dict:
        return {"seq": self.seq, "t": self.t, "kind": self.kind, "detail": self.detail}


class EventBus:
    def __init__(self, ring_size: int = RING_SIZE):
        self._ring: deque[ApiEvent] = deque(maxlen=ring_size)
        self._next_seq = 1
        self._lock = threading.Lock()
        self._subscribers: list[queue.SimpleQueue] = []

    def emit(self, t: int, kind: str, detail: Optional[dict] = None) -> ApiEvent:
        with self._lock:
            event = ApiEvent(seq=self._next_seq, t=t, kind=kind, detail=detail or {})
            self._next_seq += 1
            self._ring.append(event)
            subscribers = list(self._subscribers)
        LOG.info("t=%d seq=%d kind=%s detail=%s", event.t, event.seq, kind, event.detail)
        for q in subscribers:
            q.put(event)
        return event

    def subscribe(self, from_seq: Optional[int] = None) -> tuple[list[ApiEvent], queue.SimpleQueue]:
        """Returns (backlog, live queue).  The backlog begins with a
        GapNotice event when from_seq has already fallen out of the ring."""
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self._lock:
            backlog: list[ApiEvent] = []
            if from_seq is not None:
                oldest = self._ring[0].seq if self._ring else self._next_seq
                if from_seq < oldest:
                    backlog.append(
                        ApiEvent(
                            seq=0,
                            t=0,
                            kind=GAP_NOTICE,
                            detail={"requested": from_seq, "oldest_buffered": oldest},
                        )
                    )
                backlog.extend(e for e in self._ring if e.seq >= from_seq)
            self._subscribers.append(q)
        return backlog, q

    def unsubscribe(self, q: queue.SimpleQueue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def tail(self, limit: int = 50) -> list[ApiEvent]:
        with self._lock:
            return list(self._ring)[-limit:]
