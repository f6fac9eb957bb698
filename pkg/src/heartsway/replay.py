"""Compile a finished session into a replay schedule and walk it in a loop.

A schedule holds sorted beat/swing offsets relative to the source session's
start plus a loop period equal to the full session duration — trailing
silence is part of the trace's character, so the loop is not trimmed to the
last event.  Beat offsets are cumulative inter-beat intervals: a steady
60 BPM replays as exact 1000 ms spacing regardless of when the source
samples arrived.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .signal import FilterParams, PeltParams, bpm_to_ibi, movement_moments
from .errors import SeriesTooShort

if TYPE_CHECKING:
    from .store import SessionRecord

PAGE_SIZE = 30

BEAT = "beat"
SWING = "swing"

# Swings fire before beats at equal offsets: the swing path has higher
# mechanical latency.
_KIND_ORDER = {SWING: 0, BEAT: 1}


@dataclass(frozen=True)
class ReplaySchedule:
    source_session: str
    beat_offsets_ms: tuple[int, ...]
    swing_offsets_ms: tuple[int, ...]
    loop_period_ms: int

    def __post_init__(self):
        if self.loop_period_ms <= 0:
            raise ValueError("loop_period_ms must be positive")
        for name, offs in (("beat", self.beat_offsets_ms), ("swing", self.swing_offsets_ms)):
            if any(o < 0 or o >= self.loop_period_ms for o in offs):
                raise ValueError(f"{name} offsets must lie in [0, loop_period)")
            if any(b <= a for a, b in zip(offs, offs[1:])):
                raise ValueError(f"{name} offsets must be strictly increasing")

    @property
    def event_count(self) -> int:
        return len(self.beat_offsets_ms) + len(self.swing_offsets_ms)


@dataclass(frozen=True)
class PlaybackEvent:
    kind: str  # BEAT or SWING
    offset_ms: int
    loop_index: int

    def fire_at_ms(self, loop_period_ms: int) -> int:
        """Absolute fire time relative to replay start."""
        return self.loop_index * loop_period_ms + self.offset_ms


@dataclass(frozen=True)
class VibrationPulse:
    """One heartbeat rendering on the pillow motor."""

    strength: float = 0.40
    duration_ms: int = 100
    motor_rated_rpm: int = 9000  # metadata only

    def __post_init__(self):
        if not 0 < self.strength <= 1:
            raise ValueError("strength must be in (0, 1]")
        if self.duration_ms <= 0:
            raise ValueError("duration_ms must be positive")


@dataclass(frozen=True)
class Page:
    index: int
    total: int
    offsets: tuple[int, ...]


def prepare_schedule(
    record: "SessionRecord",
    fp: FilterParams = FilterParams(),
    pp: PeltParams = PeltParams(),
) -> ReplaySchedule:
    """Compile a finalized session record into a replay schedule.

    Rounds cumulative IBIs to whole milliseconds; offsets falling outside
    the loop period are dropped.  An empty record yields an empty schedule
    whose loop period still spans the session.
    """
    if record.ended_at is None:
        raise ValueError("record must be finalized")
    loop_period = record.ended_at - record.started_at

    beat_offsets: list[int] = []
    if record.bpm:
        ibis = bpm_to_ibi(record.bpm)
        cum = np.cumsum([e.ibi_ms for e in ibis])
        prev = -1
        for off in np.rint(cum).astype(np.int64):
            off = int(off)
            if off >= loop_period:
                break
            if off > prev:  # collapse sub-ms collisions after rounding
                beat_offsets.append(off)
                prev = off

    swing_offsets: list[int] = []
    if record.stretch:
        try:
            moments = movement_moments(record.stretch, fp, pp)
        except SeriesTooShort:
            moments = []
        swing_offsets = [
            m.t - record.started_at
            for m in moments
            if 0 <= m.t - record.started_at < loop_period
        ]

    return ReplaySchedule(
        source_session=record.id,
        beat_offsets_ms=tuple(beat_offsets),
        swing_offsets_ms=tuple(swing_offsets),
        loop_period_ms=loop_period,
    )


def _merged_offsets(schedule: ReplaySchedule) -> list[tuple[int, str]]:
    merged = [(o, BEAT) for o in schedule.beat_offsets_ms]
    merged += [(o, SWING) for o in schedule.swing_offsets_ms]
    merged.sort(key=lambda p: (p[0], _KIND_ORDER[p[1]]))
    return merged


def next_event(schedule: ReplaySchedule, elapsed_ms: int) -> Optional[PlaybackEvent]:
    """Earliest event whose absolute fire time is >= elapsed_ms.

    Stateless and deterministic: the playback driver advances by querying
    with (last fire time + 1).  Returns None when the schedule is empty —
    the permanent-idle case.
    """
    if elapsed_ms < 0:
        raise ValueError("elapsed_ms must be >= 0")
    merged = _merged_offsets(schedule)
    if not merged:
        return None
    period = schedule.loop_period_ms
    loop_index, pos = divmod(elapsed_ms, period)
    for off, kind in merged:
        if off >= pos:
            return PlaybackEvent(kind=kind, offset_ms=off, loop_index=loop_index)
    off, kind = merged[0]
    return PlaybackEvent(kind=kind, offset_ms=off, loop_index=loop_index + 1)


def paginate(offsets, page_size: int = PAGE_SIZE) -> list[Page]:
    """Split sorted offsets into fixed-size pages for the controller.

    Every page except possibly the last has exactly page_size points;
    an empty input yields zero pages.
    """
    if page_size < 1:
        raise ValueError("page_size must be >= 1")
    offsets = list(offsets)
    total = (len(offsets) + page_size - 1) // page_size
    return [
        Page(index=i, total=total, offsets=tuple(offsets[i * page_size : (i + 1) * page_size]))
        for i in range(total)
    ]


def cue_sheet(schedule: ReplaySchedule) -> str:
    """Human-readable cue sheet for the wizard who pulls the swing string."""
    lines = [
        f"Cue sheet for session {schedule.source_session}",
        f"Loop period: {_fmt_ms(schedule.loop_period_ms)} "
        f"({schedule.loop_period_ms} ms); repeats from the start.",
        f"Swing cues: {len(schedule.swing_offsets_ms)}   "
        f"Beat pulses (automatic): {len(schedule.beat_offsets_ms)}",
        "",
    ]
    if not schedule.swing_offsets_ms:
        lines.append("No swing cues in this trace.")
    for i, off in enumerate(schedule.swing_offsets_ms, start=1):
        lines.append(f"{i:3d}. SWING at {_fmt_ms(off)}  (offset {off} ms)")
    return "\n".join(lines) + "\n"


def schedule_rows(schedule: ReplaySchedule) -> list[tuple[str, int]]:
    """(kind, offset_ms) rows for CSV export, in fire order."""
    return [(kind, off) for off, kind in _merged_offsets(schedule)]


def _fmt_ms(ms: int) -> str:
    minutes, rest = divmod(ms, 60000)
    return f"{minutes:02d}:{rest / 1000:06.3f}"
