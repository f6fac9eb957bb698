"""Simulated occupants and the desk-scale hardware backend.

simulate_occupant turns a declarative script into the sample streams a real
occupant would produce: BPM samples once per simulated beat, stretch samples
at 1 Hz with a level shift at each scripted movement.  The same (script,
seed) always yields byte-identical streams.

SimulatedBackend stands in for the sensor/actuator stack.  Every read and
actuation lands in an append-only I/O log, which is what the presence-gating
and replay-timing checks assert against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import BackendClosed, InvalidScript
from ..signal import BpmSample, StretchSample
from ..replay import Page, VibrationPulse
from ..runtime import EventLoop, Timer

OCCUPIED_DISTANCE_CM = 25.0
VACANT_DISTANCE_CM = 120.0


@dataclass(frozen=True)
class OccupantScript:
    """Declarative description of one simulated occupant.

    Movement times are relative to recording start; each movement shifts
    the stretch level by movement_shift, alternating direction so the
    signal stays inside ADC range.  absence_intervals_ms (relative to
    arrival) model briefly climbing out of the hammock.
    """

    duration_ms: int
    bpm_baseline: float = 60.0
    bpm_drift_per_min: float = 0.0
    bpm_noise_sigma: float = 0.0
    stretch_baseline: float = 330.0
    movement_shift: float = 60.0
    stretch_noise_sigma: float = 0.0
    movement_times_ms: tuple[int, ...] = ()
    absence_intervals_ms: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise InvalidScript("duration_ms must be positive")
        if self.bpm_baseline <= 0:
            raise InvalidScript("bpm_baseline must be positive")
        if any(not 0 <= t < self.duration_ms for t in self.movement_times_ms):
            raise InvalidScript("movement_times_ms must lie within duration")
        if list(self.movement_times_ms) != sorted(set(self.movement_times_ms)):
            raise InvalidScript("movement_times_ms must be strictly increasing")
        for a, b in self.absence_intervals_ms:
            if not 0 <= a < b <= self.duration_ms:
                raise InvalidScript("absence interval outside duration")


def simulate_occupant(
    script: OccupantScript, seed: int, start_ms: int = 0
) -> tuple[list[BpmSample], list[StretchSample]]:
    """Generate the BPM and stretch streams for one occupant.

    BPM samples are emitted per simulated beat (the pulse sensor reports a
    BPM value on every detected beat); stretch samples on a 1 Hz grid from
    start_ms.  Deterministic for a given (script, seed, start_ms).
    """
    rng = np.random.default_rng(seed)

    bpm: list[BpmSample] = []
    t = 0.0
    while True:
        rate = script.bpm_baseline + script.bpm_drift_per_min * (t / 60000.0)
        rate = max(rate, 1.0)
        t += 60000.0 / rate
        if t >= script.duration_ms:
            break
        noise = rng.normal(0.0, script.bpm_noise_sigma) if script.bpm_noise_sigma else 0.0
        bpm.append(BpmSample(t=start_ms + int(round(t)), bpm=rate + noise))

    stretch: list[StretchSample] = []
    level = script.stretch_baseline
    moved = 0
    for k in range(script.duration_ms // 1000):
        rel = k * 1000
        while moved < len(script.movement_times_ms) and rel >= script.movement_times_ms[moved]:
            delta = script.movement_shift if moved % 2 == 0 else -script.movement_shift
            level += delta
            moved += 1
        noise = (
            rng.normal(0.0, script.stretch_noise_sigma)
            if script.stretch_noise_sigma
            else 0.0
        )
        stretch.append(StretchSample(t=start_ms + rel, value=level + noise))

    return bpm, stretch


@dataclass(frozen=True)
class IoLogEntry:
    t_ms: int
    channel: str  # distance_poll | bpm_read | stretch_read | vibrate | swing | pages
    detail: str


@dataclass
class Scenario:
    """Arrival-ordered occupant scripts; occupancy windows must not overlap."""

    occupants: list[tuple[int, OccupantScript]] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        prev_end = None
        for arrive, script in self.occupants:
            if prev_end is not None and arrive < prev_end:
                raise InvalidScript("occupants overlap")
            prev_end = arrive + script.duration_ms

    def end_ms(self) -> int:
        if not self.occupants:
            return 0
        arrive, script = self.occupants[-1]
        return arrive + script.duration_ms


class SimulatedBackend:
    """Hardware stand-in: scripted occupants, logged I/O, virtual actuators."""

    def __init__(self, loop: EventLoop, scenario: Optional[Scenario] = None):
        self.loop = loop
        self.scenario = scenario or Scenario()
        self.io_log: list[IoLogEntry] = []
        self._closed = False
        self._stream_timers: list[Timer] = []
        self._streams_active = False

    # -- sensors --

    def read_distance(self) -> float:
        """Current distance reading; logged as one poll."""
        self._require_open()
        now = self.loop.clock.now_ms()
        cm = OCCUPIED_DISTANCE_CM if self._occupied_at(now) else VACANT_DISTANCE_CM
        self.io_log.append(IoLogEntry(now, "distance_poll", f"{cm:g}"))
        return cm

    def start_streams(
        self,
        on_bpm: Callable[[BpmSample], None],
        on_stretch: Callable[[StretchSample], None],
    ) -> None:
        """Begin delivering the present occupant's sensor streams.

        Anchored at the call instant: that is when the engine powered the
        sensors up.  Each delivery is logged as a read.
        """
        self._require_open()
        if self._streams_active:
            return
        self._streams_active = True
        now = self.loop.clock.now_ms()
        script = self._script_at(now)
        if script is None:
            return
        arrive = self._arrival_at(now)
        bpm, stretch = simulate_occupant(script, self.scenario.seed + arrive, start_ms=now)

        def deliver_bpm(sample: BpmSample) -> None:
            if self._streams_active and self._occupied_at(sample.t):
                self.io_log.append(IoLogEntry(sample.t, "bpm_read", f"{sample.bpm:g}"))
                on_bpm(sample)

        def deliver_stretch(sample: StretchSample) -> None:
            if self._streams_active and self._occupied_at(sample.t):
                self.io_log.append(IoLogEntry(sample.t, "stretch_read", f"{sample.value:g}"))
                on_stretch(sample)

        for s in bpm:
            self._stream_timers.append(self.loop.call_at(s.t, lambda s=s: deliver_bpm(s)))
        for s in stretch:
            self._stream_timers.append(
                self.loop.call_at(s.t, lambda s=s: deliver_stretch(s))
            )

    def stop_streams(self) -> None:
        self._streams_active = False
        for timer in self._stream_timers:
            timer.cancel()
        self._stream_timers.clear()

    # -- actuators --

    def vibrate(self, pulse: VibrationPulse) -> None:
        self._require_open()
        self.io_log.append(
            IoLogEntry(
                self.loop.clock.now_ms(),
                "vibrate",
                f"{pulse.strength:.2f},{pulse.duration_ms}",
            )
        )

    def swing(self) -> None:
        self._require_open()
        self.io_log.append(IoLogEntry(self.loop.clock.now_ms(), "swing", ""))

    def load_schedule(self, beat_pages: list[Page], swing_pages: list[Page]) -> int:
        """Hand schedule pages to the (virtual) controller; returns page count."""
        self._require_open()
        n = len(beat_pages) + len(swing_pages)
        self.io_log.append(
            IoLogEntry(
                self.loop.clock.now_ms(),
                "pages",
                f"beat:{len(beat_pages)},swing:{len(swing_pages)}",
            )
        )
        return n

    def close(self) -> None:
        self.stop_streams()
        self._closed = True

    # -- log access --

    def io_log_rows(self) -> list[tuple[int, str, str]]:
        return [(e.t_ms, e.channel, e.detail) for e in self.io_log]

    # -- internals --

    def _require_open(self) -> None:
        if self._closed:
            raise BackendClosed("simulated backend is closed")

    def _occupied_at(self, t_ms: int) -> bool:
        for arrive, script in self.scenario.occupants:
            if arrive <= t_ms < arrive + script.duration_ms:
                rel = t_ms - arrive
                return not any(a <= rel < b for a, b in script.absence_intervals_ms)
        return False

    def _script_at(self, t_ms: int) -> Optional[OccupantScript]:
        for arrive, script in self.scenario.occupants:
            if arrive <= t_ms < arrive + script.duration_ms:
                return script
        return None

    def _arrival_at(self, t_ms: int) -> int:
        for arrive, script in self.scenario.occupants:
            if arrive <= t_ms < arrive + script.duration_ms:
                return arrive
        return 0
