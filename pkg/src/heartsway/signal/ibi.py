"""Heart-rate series handling: BPM samples and derived inter-beat intervals."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import EmptySeries, NonMonotonicTime, NonPositiveBpm

# Physiologically plausible BPM band (open interval). Readings outside it are
# treated as sensor glitches and dropped at capture time, not converted.
PLAUSIBLE_BPM_LOW = 20.0
PLAUSIBLE_BPM_HIGH = 250.0


@dataclass(frozen=True)
class BpmSample:
    """One pulse-sensor reading: epoch-ms timestamp and beats per minute."""

    t: int
    bpm: float


@dataclass(frozen=True)
class IbiEvent:
    """One reconstructed beat: epoch-ms instant and the interval it implies."""

    t: int
    ibi_ms: float


def is_plausible_bpm(bpm: float) -> bool:
    return PLAUSIBLE_BPM_LOW < bpm < PLAUSIBLE_BPM_HIGH


def bpm_to_ibi(samples: list[BpmSample]) -> list[IbiEvent]:
    """Convert a BPM series to one inter-beat interval per sample.

    ibi_ms = 60000 / bpm.  Each event keeps its source sample's timestamp;
    replay works from cumulative intervals, so the absolute instants only
    order the events.

    Raises EmptySeries, NonPositiveBpm, or NonMonotonicTime on bad input.
    """
    if not samples:
        raise EmptySeries("no BPM samples")
    events = []
    prev_t = None
    for s in samples:
        if s.bpm <= 0:
            raise NonPositiveBpm(f"bpm={s.bpm} at t={s.t}")
        if prev_t is not None and s.t <= prev_t:
            raise NonMonotonicTime(f"t={s.t} after t={prev_t}")
        prev_t = s.t
        events.append(IbiEvent(t=s.t, ibi_ms=60000.0 / s.bpm))
    return events
