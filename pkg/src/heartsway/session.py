"""Orchestrator: presence-gated lifecycle, concurrent record + replay,
preparation on exit, Wizard-of-Oz cue emission.

One logical event loop drives everything.  Only the distance poll runs
while the hammock is vacant; detecting an occupant begins a recording
session and starts replaying the predecessor's schedule at the same time.
When the occupant leaves (debounced by a grace window so a seat adjustment
does not split the trace), the session is finalized, compiled into a
schedule, and installed — purging the trace it replaces.
"""

from __future__ import annotations

import enum
import logging
import threading
from dataclasses import dataclass
from typing import Optional

from . import events as ev
from .config import EngineConfig
from .device.presence import PresenceDetector, PresenceState
from .device.sim import OCCUPIED_DISTANCE_CM, VACANT_DISTANCE_CM
from .errors import HeartSwayError, InvalidPhase, UnknownCue
from .replay import (
    BEAT,
    SWING,
    PlaybackEvent,
    ReplaySchedule,
    next_event,
    paginate,
    prepare_schedule,
)
from .runtime import EventLoop, Timer, VirtualClock
from .signal import BpmSample, StretchSample, is_plausible_bpm
from .store import PreparedTrace, TraceStore

LOG = logging.getLogger("heartsway.session")


class SessionPhase(enum.Enum):
    IDLE = "Idle"
    OCCUPIED = "Occupied"
    PREPARING = "Preparing"


@dataclass
class WozCue:
    id: int
    due_at: int
    issued_at: int
    acknowledged: bool = False
    late_by_ms: Optional[int] = None


class _ReplayState:
    def __init__(self, schedule: ReplaySchedule, started_at: int):
        self.schedule = schedule
        self.started_at = started_at
        self.cursor = 0  # next query offset into the looped timeline
        self.timer: Optional[Timer] = None
        self.beats_fired = 0
        self.swings_fired = 0


class Engine:
    """The orchestrating state machine.  All handlers run on the loop thread;
    cross-thread entry points (API commands) go through loop.post()."""

    def __init__(
        self,
        config: EngineConfig,
        store: TraceStore,
        backend,
        loop: EventLoop,
        bus: Optional[ev.EventBus] = None,
    ):
        self.config = config
        self.store = store
        self.backend = backend
        self.loop = loop
        self.bus = bus or ev.EventBus()
        self.detector = PresenceDetector(config.presence)
        self.phase = SessionPhase.IDLE
        self.session_id: Optional[str] = None
        self.replay: Optional[_ReplayState] = None
        self.cues: dict[int, WozCue] = {}
        self._cue_seq = 0
        self._cue_cursor = 0
        self._cue_timers: list[Timer] = []
        self._grace_timer: Optional[Timer] = None
        self._max_timer: Optional[Timer] = None
        self._poll_timer: Optional[Timer] = None
        self._pending_exit_at: Optional[int] = None
        self._override: Optional[PresenceState] = None
        self._last_bpm_t: Optional[int] = None
        self._last_stretch_t: Optional[int] = None
        self._stopped = False

    # ------------------------------------------------------------- lifecycle

    def start(self) -> None:
        """Recover interrupted sessions, seed the store if asked, start polling."""
        now = self.loop.clock.now_ms()
        for record in self.store.recover_interrupted():
            LOG.info("recovered interrupted session %s", record.id)
            try:
                schedule = prepare_schedule(record, self.config.filter, self.config.pelt)
                self.store.install_prepared(
                    PreparedTrace(
                        source_session=record.id, schedule=schedule, prepared_at=now
                    )
                )
            except HeartSwayError as exc:
                self._emit(ev.ERROR, {"where": "recovery", "error": str(exc)})
        if self.config.seed_trace and self.store.peek_prepared() is None:
            self.load_seed_trace(str(self.config.seed_trace))
        self._poll_presence()

    def stop(self) -> None:
        """Clean shutdown: finalize any live session and prepare its trace."""
        self._stopped = True
        for timer in self._all_timers():
            timer.cancel()
        if self.phase is SessionPhase.OCCUPIED:
            now = self.loop.clock.now_ms()
            self._halt_streams_and_replay()
            self._pending_exit_at = self._pending_exit_at or now
            self._finalize_and_prepare(synchronous=True)

    # ------------------------------------------------------------- presence

    def _poll_presence(self) -> None:
        if self._stopped:
            return
        if self._override is not None:
            distance = (
                OCCUPIED_DISTANCE_CM
                if self._override is PresenceState.OCCUPIED
                else VACANT_DISTANCE_CM
            )
        else:
            distance = self.backend.read_distance()
        transition = self.detector.update(distance)
        if transition is not None:
            self._on_presence(transition)
        self._poll_timer = self.loop.call_later(
            self.config.presence.poll_period_ms, self._poll_presence
        )

    def _on_presence(self, state: PresenceState) -> None:
        self._emit(ev.PRESENCE_CHANGED, {"presence": state.value})
        if state is PresenceState.OCCUPIED:
            if self.phase is SessionPhase.OCCUPIED and self._pending_exit_at is not None:
                self._resume_occupancy()
            elif self.phase is SessionPhase.IDLE:
                self._begin_occupancy()
            # PREPARING: _after_prepare re-checks presence and begins then.
        else:
            if self.phase is SessionPhase.OCCUPIED and self._pending_exit_at is None:
                self._pause_occupancy()

    # ------------------------------------------------------------- occupancy

    def _begin_occupancy(self) -> None:
        now = self.loop.clock.now_ms()
        self.session_id = self.store.begin_session(now)
        self._last_bpm_t = self._last_stretch_t = None
        self._set_phase(SessionPhase.OCCUPIED, {"session": self.session_id})
        self.backend.start_streams(self._on_bpm_sample, self._on_stretch_sample)
        trace = self.store.take_prepared()
        if trace is not None:
            self._start_replay(trace.schedule, now)
        self._max_timer = self.loop.call_later(
            self.config.max_session_ms, self._on_max_session
        )

    def _pause_occupancy(self) -> None:
        """Occupant left (or lifted out): stop all sensing and actuation at
        once; final judgement is deferred by the grace window."""
        now = self.loop.clock.now_ms()
        self._pending_exit_at = now
        self._halt_streams_and_replay()
        self._grace_timer = self.loop.call_later(
            self.config.grace_ms, self._finalize_and_prepare
        )

    def _resume_occupancy(self) -> None:
        """Back within the grace window: same session continues."""
        self._pending_exit_at = None
        if self._grace_timer:
            self._grace_timer.cancel()
            self._grace_timer = None
        self.backend.start_streams(self._on_bpm_sample, self._on_stretch_sample)
        if self.replay is not None:
            now = self.loop.clock.now_ms()
            self.replay.cursor = max(self.replay.cursor, now - self.replay.started_at)
            self._schedule_replay_event()
            if self.config.woz_mode:
                self._schedule_next_cue()

    def _halt_streams_and_replay(self) -> None:
        self.backend.stop_streams()
        if self.replay is not None and self.replay.timer is not None:
            self.replay.timer.cancel()
            self.replay.timer = None
        for timer in self._cue_timers:
            timer.cancel()
        self._cue_timers.clear()
        if self._max_timer:
            self._max_timer.cancel()
            self._max_timer = None

    def _on_max_session(self) -> None:
        """Unattended-deployment guard: a session cannot outlive the cap."""
        if self.phase is not SessionPhase.OCCUPIED:
            return
        LOG.warning("max session length reached; auto-finalizing")
        self._pending_exit_at = self.loop.clock.now_ms()
        self._halt_streams_and_replay()
        self._finalize_and_prepare()

    def _finalize_and_prepare(self, synchronous: bool = False) -> None:
        ended_at = self._pending_exit_at or self.loop.clock.now_ms()
        sid = self.session_id
        self._pending_exit_at = None
        self._grace_timer = None
        try:
            record = self.store.finalize_session(sid, ended_at)
        except HeartSwayError as exc:
            self._emit(ev.ERROR, {"where": "finalize", "error": str(exc)})
            self._reset_to_idle()
            return
        self._set_phase(SessionPhase.PREPARING, {"session": sid})

        def work() -> None:
            try:
                schedule = prepare_schedule(record, self.config.filter, self.config.pelt)
                self.store.install_prepared(
                    PreparedTrace(
                        source_session=record.id,
                        schedule=schedule,
                        prepared_at=self.loop.clock.now_ms(),
                    )
                )
                detail = {
                    "session": record.id,
                    "beats": len(schedule.beat_offsets_ms),
                    "swings": len(schedule.swing_offsets_ms),
                    "loop_period_ms": schedule.loop_period_ms,
                }
            except Exception as exc:  # fail safe: never wedge the phase machine
                LOG.exception("prepare failed")
                detail = {"error": str(exc)}
            self.loop.post(lambda: self._after_prepare(detail))

        if synchronous:
            work()
            return
        if isinstance(self.loop.clock, VirtualClock):
            self.loop.post(work)
        else:
            threading.Thread(target=work, name="heartsway-prepare", daemon=True).start()

    def _after_prepare(self, detail: dict) -> None:
        if "error" in detail:
            self._emit(ev.ERROR, {"where": "prepare", **detail})
        self._reset_to_idle()
        # The next occupant may already be in the hammock.
        if not self._stopped and self.detector.state is PresenceState.OCCUPIED:
            self._begin_occupancy()

    def _reset_to_idle(self) -> None:
        self.session_id = None
        self.replay = None
        self.cues.clear()
        self._set_phase(SessionPhase.IDLE, {})

    # ------------------------------------------------------------- recording

    def _on_bpm_sample(self, sample: BpmSample) -> None:
        if self.phase is not SessionPhase.OCCUPIED or self.session_id is None:
            return
        if not is_plausible_bpm(sample.bpm):
            return  # sensor glitch; timing-only capture tolerates gaps
        if self._last_bpm_t is not None and sample.t <= self._last_bpm_t:
            return
        self._last_bpm_t = sample.t
        self.store.append(self.session_id, [sample])

    def _on_stretch_sample(self, sample: StretchSample) -> None:
        if self.phase is not SessionPhase.OCCUPIED or self.session_id is None:
            return
        if self._last_stretch_t is not None and sample.t <= self._last_stretch_t:
            return
        self._last_stretch_t = sample.t
        self.store.append(self.session_id, [sample])

    # ------------------------------------------------------------- replay

    def _start_replay(self, schedule: ReplaySchedule, now: int) -> None:
        self.replay = _ReplayState(schedule, started_at=now)
        beat_pages = paginate(schedule.beat_offsets_ms, self.config.page_size)
        swing_pages = paginate(schedule.swing_offsets_ms, self.config.page_size)
        try:
            self.backend.load_schedule(beat_pages, swing_pages)
        except HeartSwayError as exc:
            self._emit(ev.ERROR, {"where": "load_schedule", "error": str(exc)})
        self._emit(
            ev.PAGES_SENT,
            {
                "source": schedule.source_session,
                "beat_pages": len(beat_pages),
                "swing_pages": len(swing_pages),
            },
        )
        self._schedule_replay_event()
        if self.config.woz_mode:
            self._cue_cursor = 0
            self._schedule_next_cue()

    def _schedule_replay_event(self) -> None:
        state = self.replay
        if state is None:
            return
        event = next_event(state.schedule, state.cursor)
        if event is None:
            return  # empty trace: permanent idle
        fire_at = state.started_at + event.fire_at_ms(state.schedule.loop_period_ms)
        state.timer = self.loop.call_at(
            max(fire_at, self.loop.clock.now_ms()), lambda: self._fire_replay(event)
        )

    def _fire_replay(self, event: PlaybackEvent) -> None:
        state = self.replay
        if (
            state is None
            or self.phase is not SessionPhase.OCCUPIED
            or self._pending_exit_at is not None
        ):
            return
        period = state.schedule.loop_period_ms
        offset = event.fire_at_ms(period)
        for fired in _events_at(state.schedule, event):
            if fired.kind == BEAT:
                self.backend.vibrate(self.config.vibration)
                state.beats_fired += 1
                self._emit(
                    ev.BEAT_FIRED,
                    {"offset_ms": fired.offset_ms, "loop_index": fired.loop_index},
                )
            elif not self.config.woz_mode:
                self.backend.swing()
                state.swings_fired += 1
                self._emit(
                    ev.SWING_FIRED,
                    {"offset_ms": fired.offset_ms, "loop_index": fired.loop_index},
                )
        state.cursor = offset + 1
        self._schedule_replay_event()

    # ------------------------------------------------------------- WoZ cues

    def _schedule_next_cue(self) -> None:
        """Issue a cue lead_ms before each swing moment so the wizard can
        get ready; the swing itself is the wizard's job in WoZ mode."""
        state = self.replay
        if state is None or not state.schedule.swing_offsets_ms:
            return
        swings_only = ReplaySchedule(
            source_session=state.schedule.source_session,
            beat_offsets_ms=(),
            swing_offsets_ms=state.schedule.swing_offsets_ms,
            loop_period_ms=state.schedule.loop_period_ms,
        )
        event = next_event(swings_only, self._cue_cursor)
        if event is None:
            return
        due_at = state.started_at + event.fire_at_ms(swings_only.loop_period_ms)
        issue_at = max(due_at - self.config.woz_lead_ms, self.loop.clock.now_ms())
        self._cue_cursor = event.fire_at_ms(swings_only.loop_period_ms) + 1
        self._cue_timers.append(
            self.loop.call_at(issue_at, lambda: self._issue_cue(due_at))
        )

    def _issue_cue(self, due_at: int) -> None:
        if self.phase is not SessionPhase.OCCUPIED or self._pending_exit_at is not None:
            return
        self._cue_seq += 1
        cue = WozCue(id=self._cue_seq, due_at=due_at, issued_at=self.loop.clock.now_ms())
        self.cues[cue.id] = cue
        self._emit(ev.CUE_ISSUED, {"cue": cue.id, "due_at": due_at})
        self._cue_timers.append(
            self.loop.call_at(
                due_at + self.config.woz_late_ms, lambda: self._check_cue_late(cue.id)
            )
        )
        self._schedule_next_cue()

    def _check_cue_late(self, cue_id: int) -> None:
        cue = self.cues.get(cue_id)
        if cue is not None and not cue.acknowledged and cue.late_by_ms is None:
            cue.late_by_ms = self.config.woz_late_ms
            self._emit(ev.ERROR, {"where": "woz", "cue": cue_id, "late": True})

    def ack_cue(self, cue_id: int) -> WozCue:
        cue = self.cues.get(cue_id)
        if cue is None:
            raise UnknownCue(str(cue_id))
        now = self.loop.clock.now_ms()
        cue.acknowledged = True
        lateness = now - cue.due_at
        cue.late_by_ms = lateness if lateness > self.config.woz_late_ms else None
        self._emit(
            ev.CUE_ACKED, {"cue": cue_id, "late_by_ms": cue.late_by_ms}
        )
        return cue

    # ------------------------------------------------------------- commands

    def override_presence(self, state: Optional[PresenceState]) -> None:
        """Feed synthetic distance readings until cleared (state=None)."""
        self._override = state

    def load_seed_trace(self, path: str) -> None:
        """Install a schedule document as the prepared trace (first-run seed)."""
        import json

        if self.phase is not SessionPhase.IDLE:
            raise InvalidPhase("seed trace can only load while idle")
        doc = json.loads(open(path).read())
        schedule = ReplaySchedule(
            source_session=doc.get("source_session", "seed"),
            beat_offsets_ms=tuple(doc["beat_offsets_ms"]),
            swing_offsets_ms=tuple(doc["swing_offsets_ms"]),
            loop_period_ms=doc["loop_period_ms"],
        )
        self.store.install_prepared(
            PreparedTrace(
                source_session=schedule.source_session,
                schedule=schedule,
                prepared_at=self.loop.clock.now_ms(),
            )
        )

    # ------------------------------------------------------------- snapshot

    def snapshot(self) -> dict:
        """Engine status: phases, counts, and progress — never raw biodata."""
        now = self.loop.clock.now_ms()
        doc: dict = {
            "phase": self.phase.value,
            "presence": self.detector.state.value,
            "prepared": self.store.peek_prepared() is not None
            and not self.store.peek_prepared().consumed,
            "woz_mode": self.config.woz_mode,
            "t": now,
        }
        live = self.store.live_session_stats()
        if live is not None:
            doc["live_session"] = {
                "id": live["id"],
                "duration_ms": now - live["started_at"],
                "bpm_count": live["bpm_count"],
                "stretch_count": live["stretch_count"],
            }
        if self.replay is not None:
            state = self.replay
            elapsed = now - state.started_at
            period = state.schedule.loop_period_ms
            upcoming = next_event(state.schedule, state.cursor)
            doc["replay"] = {
                "source": state.schedule.source_session,
                "elapsed_ms": elapsed,
                "loop_index": elapsed // period,
                "loop_period_ms": period,
                "beats_total": len(state.schedule.beat_offsets_ms),
                "swings_total": len(state.schedule.swing_offsets_ms),
                "beats_fired": state.beats_fired,
                "swings_fired": state.swings_fired,
                "next_offset_ms": upcoming.offset_ms if upcoming else None,
            }
        pending = [
            {"id": c.id, "due_at": c.due_at, "due_in_ms": c.due_at - now}
            for c in self.cues.values()
            if not c.acknowledged
        ]
        if self.config.woz_mode:
            doc["woz_pending_cues"] = pending
        return doc

    # ------------------------------------------------------------- plumbing

    def _set_phase(self, phase: SessionPhase, detail: dict) -> None:
        self.phase = phase
        self._emit(ev.PHASE_CHANGED, {"phase": phase.value, **detail})

    def _emit(self, kind: str, detail: dict) -> None:
        self.bus.emit(self.loop.clock.now_ms(), kind, detail)

    def _all_timers(self) -> list[Timer]:
        timers = list(self._cue_timers)
        for t in (self._grace_timer, self._max_timer, self._poll_timer):
            if t is not None:
                timers.append(t)
        if self.replay is not None and self.replay.timer is not None:
            timers.append(self.replay.timer)
        return timers


def _events_at(schedule: ReplaySchedule, first: PlaybackEvent) -> list[PlaybackEvent]:
    """The fired event plus any co-scheduled event at the same offset
    (a swing and a beat can share an offset; swing goes first)."""
    out = [first]
    if first.kind == SWING and first.offset_ms in schedule.beat_offsets_ms:
        out.append(PlaybackEvent(BEAT, first.offset_ms, first.loop_index))
    return out
