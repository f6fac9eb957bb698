"""Local persistence for sessions and the single prepared trace.

Layout under the data directory:

    lock                    single-instance guard (pid inside)
    index.json              ids of every session ever created + purge flags
    prepared.json           the one PreparedTrace, replaced atomically
    sessions/<id>/meta.json started_at / ended_at
    sessions/<id>/bpm.log   one "t_ms,bpm" line per sample, append-only
    sessions/<id>/stretch.log

Visibility rule: raw samples exist for at most two sessions at any instant —
the live one and the immediate predecessor.  Installing a new prepared trace
physically deletes the replaced trace's source samples; there is no way to
reach anything older.
"""

from __future__ import annotations

import json
import os
import shutil
import threading
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import (
    DataDirLocked,
    NonMonotonicTime,
    SessionAlreadyLive,
    SessionNotFound,
    SessionNotLive,
    SessionPurged,
)
from .replay import ReplaySchedule
from .signal import BpmSample, StretchSample


@dataclass
class SessionRecord:
    """One occupant's full recorded trace with lifecycle timestamps."""

    id: str
    started_at: int
    ended_at: Optional[int] = None
    bpm: list[BpmSample] = field(default_factory=list)
    stretch: list[StretchSample] = field(default_factory=list)

    @property
    def live(self) -> bool:
        return self.ended_at is None


@dataclass(frozen=True)
class PreparedTrace:
    """The compiled predecessor trace awaiting (or consumed by) a successor."""

    source_session: str
    schedule: ReplaySchedule
    prepared_at: int
    consumed: bool = False


def _schedule_to_doc(s: ReplaySchedule) -> dict:
    return {
        "source_session": s.source_session,
        "beat_offsets_ms": list(s.beat_offsets_ms),
        "swing_offsets_ms": list(s.swing_offsets_ms),
        "loop_period_ms": s.loop_period_ms,
    }


def _schedule_from_doc(doc: dict) -> ReplaySchedule:
    return ReplaySchedule(
        source_session=doc["source_session"],
        beat_offsets_ms=tuple(doc["beat_offsets_ms"]),
        swing_offsets_ms=tuple(doc["swing_offsets_ms"]),
        loop_period_ms=doc["loop_period_ms"],
    )


class TraceStore:
    """Append-mostly file store; one writer and one reader thread supported.

    All public methods take the internal lock, so each call is atomic at
    the record level and a PreparedTrace can never be torn.
    """

    def __init__(self, data_dir, *, acquire_lock: bool = True):
        self.root = Path(data_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "sessions").mkdir(exist_ok=True)
        self._mutex = threading.RLock()
        self._lock_fd: Optional[int] = None
        if acquire_lock:
            self._acquire_lock()
        self._index: dict[str, dict] = self._load_json("index.json", {})
        self._live: Optional[SessionRecord] = None
        self._bpm_fh = None
        self._stretch_fh = None

    # -- single-instance lock --

    def _acquire_lock(self) -> None:
        lock_path = self.root / "lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            pid = lock_path.read_text().strip() or "?"
            raise DataDirLocked(
                f"{self.root} is owned by another instance (pid {pid})"
            ) from None
        os.write(fd, str(os.getpid()).encode())
        self._lock_fd = fd

    def close(self) -> None:
        with self._mutex:
            self._close_logs()
            if self._lock_fd is not None:
                os.close(self._lock_fd)
                (self.root / "lock").unlink(missing_ok=True)
                self._lock_fd = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- sessions --

    def begin_session(self, now: int) -> str:
        with self._mutex:
            if self._live is not None:
                raise SessionAlreadyLive(self._live.id)
            sid = uuid.uuid4().hex[:12]
            self._live = SessionRecord(id=sid, started_at=now)
            sdir = self._session_dir(sid)
            sdir.mkdir(parents=True)
            self._write_json(sdir / "meta.json", {"started_at": now, "ended_at": None})
            self._bpm_fh = open(sdir / "bpm.log", "a", buffering=1)
            self._stretch_fh = open(sdir / "stretch.log", "a", buffering=1)
            self._index[sid] = {"purged": False}
            self._write_json(self.root / "index.json", self._index)
            return sid

    def append(self, session_id: str, samples) -> int:
        """Append BPM or stretch samples (not mixed) to the live session."""
        with self._mutex:
            rec = self._require_live(session_id)
            if not samples:
                return 0
            if isinstance(samples[0], BpmSample):
                series, fh = rec.bpm, self._bpm_fh
                lines = [f"{s.t},{s.bpm:g}\n" for s in samples]
            elif isinstance(samples[0], StretchSample):
                series, fh = rec.stretch, self._stretch_fh
                lines = [f"{s.t},{s.value:g}\n" for s in samples]
            else:
                raise TypeError(f"unsupported sample type {type(samples[0]).__name__}")
            last = series[-1].t if series else None
            for s in samples:
                if last is not None and s.t < last:
                    raise NonMonotonicTime(f"t={s.t} before stored t={last}")
                last = s.t
            series.extend(samples)
            fh.writelines(lines)
            fh.flush()
            return len(samples)

    def finalize_session(self, session_id: str, now: int) -> SessionRecord:
        with self._mutex:
            rec = self._require_live(session_id)
            rec.ended_at = max(now, rec.started_at + 1)
            self._write_json(
                self._session_dir(session_id) / "meta.json",
                {"started_at": rec.started_at, "ended_at": rec.ended_at},
            )
            self._close_logs()
            self._live = None
            return rec

    def live_session_id(self) -> Optional[str]:
        with self._mutex:
            return self._live.id if self._live else None

    def live_session_stats(self) -> Optional[dict]:
        with self._mutex:
            if self._live is None:
                return None
            return {
                "id": self._live.id,
                "started_at": self._live.started_at,
                "bpm_count": len(self._live.bpm),
                "stretch_count": len(self._live.stretch),
            }

    def read_session(self, session_id: str) -> SessionRecord:
        """Load a retained session from disk (live or immediate predecessor)."""
        with self._mutex:
            if session_id not in self._index:
                raise SessionNotFound(session_id)
            if self._index[session_id].get("purged"):
                raise SessionPurged(session_id)
            sdir = self._session_dir(session_id)
            meta = json.loads((sdir / "meta.json").read_text())
            rec = SessionRecord(
                id=session_id,
                started_at=meta["started_at"],
                ended_at=meta["ended_at"],
            )
            rec.bpm = [
                BpmSample(int(t), float(v))
                for t, v in self._read_log(sdir / "bpm.log")
            ]
            rec.stretch = [
                StretchSample(int(t), float(v))
                for t, v in self._read_log(sdir / "stretch.log")
            ]
            return rec

    def session_ids(self) -> dict[str, bool]:
        """All known ids -> purged flag (ids carry no biodata)."""
        with self._mutex:
            return {sid: info.get("purged", False) for sid, info in self._index.items()}

    # -- prepared trace --

    def install_prepared(self, trace: PreparedTrace) -> None:
        """Install the next trace, purging the one it replaces."""
        if trace.consumed:
            raise ValueError("cannot install an already-consumed trace")
        with self._mutex:
            old = self._load_prepared()
            self._write_json(
                self.root / "prepared.json",
                {
                    "source_session": trace.source_session,
                    "schedule": _schedule_to_doc(trace.schedule),
                    "prepared_at": trace.prepared_at,
                    "consumed": trace.consumed,
                },
            )
            if old is not None and old.source_session != trace.source_session:
                self._purge_session(old.source_session)

    def take_prepared(self) -> Optional[PreparedTrace]:
        """Return the pending trace and mark it consumed; None if nothing
        is pending (empty store or already consumed)."""
        with self._mutex:
            trace = self._load_prepared()
            if trace is None or trace.consumed:
                return None
            consumed = replace(trace, consumed=True)
            self._write_json(
                self.root / "prepared.json",
                {
                    "source_session": consumed.source_session,
                    "schedule": _schedule_to_doc(consumed.schedule),
                    "prepared_at": consumed.prepared_at,
                    "consumed": True,
                },
            )
            return consumed

    def peek_prepared(self) -> Optional[PreparedTrace]:
        with self._mutex:
            return self._load_prepared()

    # -- crash recovery --

    def recover_interrupted(self) -> list[SessionRecord]:
        """Close any session left live by a crash at its last sample time.

        Returns the closed records so the engine can prepare and install
        them, preserving the chain across restarts.
        """
        with self._mutex:
            recovered = []
            for sdir in sorted((self.root / "sessions").iterdir()):
                meta_path = sdir / "meta.json"
                if not meta_path.exists():
                    continue
                meta = json.loads(meta_path.read_text())
                if meta["ended_at"] is not None:
                    continue
                sid = sdir.name
                rec = SessionRecord(id=sid, started_at=meta["started_at"])
                rec.bpm = [
                    BpmSample(int(t), float(v))
                    for t, v in self._read_log(sdir / "bpm.log")
                ]
                rec.stretch = [
                    StretchSample(int(t), float(v))
                    for t, v in self._read_log(sdir / "stretch.log")
                ]
                last = max(
                    [s.t for s in rec.bpm] + [s.t for s in rec.stretch],
                    default=rec.started_at + 1,
                )
                rec.ended_at = max(last, rec.started_at + 1)
                self._write_json(
                    meta_path,
                    {"started_at": rec.started_at, "ended_at": rec.ended_at},
                )
                recovered.append(rec)
            return recovered

    # -- internals --

    def _require_live(self, session_id: str) -> SessionRecord:
        if self._live is None or self._live.id != session_id:
            raise SessionNotLive(session_id)
        return self._live

    def _session_dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def _purge_session(self, session_id: str) -> None:
        """Physically delete raw samples; the id stays known as purged."""
        sdir = self._session_dir(session_id)
        if sdir.exists():
            shutil.rmtree(sdir)
        if session_id in self._index:
            self._index[session_id]["purged"] = True
            self._write_json(self.root / "index.json", self._index)

    def _load_prepared(self) -> Optional[PreparedTrace]:
        path = self.root / "prepared.json"
        if not path.exists():
            return None
        doc = json.loads(path.read_text())
        return PreparedTrace(
            source_session=doc["source_session"],
            schedule=_schedule_from_doc(doc["schedule"]),
            prepared_at=doc["prepared_at"],
            consumed=doc["consumed"],
        )

    def _close_logs(self) -> None:
        for fh in (self._bpm_fh, self._stretch_fh):
            if fh is not None:
                fh.close()
        self._bpm_fh = self._stretch_fh = None

    @staticmethod
    def _read_log(path: Path) -> list[tuple[str, str]]:
        if not path.exists():
            return []
        rows = []
        for line in path.read_text().splitlines():
            if line.strip():
                t, v = line.split(",", 1)
                rows.append((t, v))
        return rows

    def _load_json(self, name: str, default):
        path = self.root / name
        if not path.exists():
            return default
        return json.loads(path.read_text())

    @staticmethod
    def _write_json(path: Path, doc) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(doc, indent=1))
        os.replace(tmp, path)
