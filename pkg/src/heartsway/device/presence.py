"""Presence detection from the upward-facing distance sensor.

The sensor sits under the hammock; an occupant pushes the fabric down,
shortening the echo distance.  Transitions are debounced: it takes
debounce_count consecutive readings on the other side of the threshold to
flip state, so a single stray echo changes nothing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional


class PresenceState(enum.Enum):
    VACANT = "Vacant"
    OCCUPIED = "Occupied"


@dataclass(frozen=True)
class PresenceParams:
    threshold_cm: float = 40.0
    debounce_count: int = 3
    poll_period_ms: int = 200

    def __post_init__(self):
        if self.threshold_cm <= 0:
            raise ValueError("threshold_cm must be > 0")
        if self.debounce_count < 1:
            raise ValueError("debounce_count must be >= 1")
        if self.poll_period_ms < 1:
            raise ValueError("poll_period_ms must be >= 1")


class PresenceDetector:
    def __init__(self, params: PresenceParams = PresenceParams()):
        self.params = params
        self.state = PresenceState.VACANT
        self._streak = 0

    def update(self, distance_cm: float) -> Optional[PresenceState]:
        """Feed one reading; returns the new state on a transition, else None."""
        if distance_cm < 0:
            raise ValueError("distance_cm must be >= 0")
        near = distance_cm < self.params.threshold_cm
        opposite = (
            near if self.state is PresenceState.VACANT else not near
        )
        if opposite:
            self._streak += 1
            if self._streak >= self.params.debounce_count:
                self.state = (
                    PresenceState.OCCUPIED
                    if self.state is PresenceState.VACANT
                    else PresenceState.VACANT
                )
                self._streak = 0
                return self.state
        else:
            self._streak = 0
        return None
