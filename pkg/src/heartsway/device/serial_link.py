"""Controller link over a serial byte stream.

Opens the configured tty (or any duplex byte stream handed in, which is how
tests drive it), configures 115200-8-N-1, and translates between engine
calls and wire frames.  A reader thread feeds the stream decoder and posts
decoded sensor reports onto the engine loop; the writer side is the engine
loop itself, so the two directions share nothing but the socket.
"""

from __future__ import annotations

import os
import threading
from typing import Callable, Optional

from .. import wire
from ..errors import BackendClosed, DeviceOpenFailed
from ..replay import Page, VibrationPulse
from ..runtime import EventLoop
from ..signal import BpmSample, StretchSample

DEFAULT_BAUD = 115200


def open_serial(path: str, baud: int = DEFAULT_BAUD):
    """Open and configure a tty for raw 8-N-1 I/O at the given rate."""
    import termios
    import tty

    speed = getattr(termios, f"B{baud}", None)
    if speed is None:
        raise DeviceOpenFailed(f"unsupported baud rate {baud}")
    try:
        fd = os.open(path, os.O_RDWR | os.O_NOCTTY)
    except OSError as exc:
        raise DeviceOpenFailed(f"{path}: {exc}") from exc
    try:
        tty.setraw(fd)
        attrs = termios.tcgetattr(fd)
        attrs[4] = attrs[5] = speed
        termios.tcsetattr(fd, termios.TCSANOW, attrs)
    except termios.error as exc:
        os.close(fd)
        raise DeviceOpenFailed(f"{path}: {exc}") from exc
    return _FdStream(fd)


class _FdStream:
    def __init__(self, fd: int):
        self.fd = fd

    def read(self, n: int) -> bytes:
        return os.read(self.fd, n)

    def write(self, data: bytes) -> None:
        os.write(self.fd, data)

    def close(self) -> None:
        os.close(self.fd)


class SerialBackend:
    """Engine-facing backend that speaks the wire protocol to the controller."""

    def __init__(self, loop: EventLoop, stream, session_epoch_ms: int = 0):
        self.loop = loop
        self.stream = stream
        self.session_epoch_ms = session_epoch_ms
        self._decoder = wire.FrameDecoder()
        self._seq = 0
        self._closed = False
        self._streams_active = False
        self._on_bpm: Optional[Callable[[BpmSample], None]] = None
        self._on_stretch: Optional[Callable[[StretchSample], None]] = None
        self._last_distance_cm = 1000.0
        self._reader: Optional[threading.Thread] = None

    def start_reader(self) -> None:
        self._reader = threading.Thread(
            target=self._read_forever, name="heartsway-serial", daemon=True
        )
        self._reader.start()

    def _read_forever(self) -> None:
        while not self._closed:
            try:
                chunk = self.stream.read(256)
            except OSError:
                break
            if not chunk:
                break
            for msg, _seq in self._decoder.feed(chunk):
                self.loop.post(lambda m=msg: self._dispatch(m))

    def _dispatch(self, msg: wire.Message) -> None:
        now = self.loop.clock.now_ms()
        if isinstance(msg, wire.DistanceReport):
            self._last_distance_cm = msg.cm
        elif isinstance(msg, wire.BpmReport) and self._streams_active and self._on_bpm:
            self._on_bpm(BpmSample(t=now, bpm=msg.bpm_tenths / 10.0))
        elif isinstance(msg, wire.StretchReport) and self._streams_active and self._on_stretch:
            self._on_stretch(StretchSample(t=now, value=float(msg.value)))

    # -- backend interface --

    def read_distance(self) -> float:
        self._require_open()
        return self._last_distance_cm

    def start_streams(self, on_bpm, on_stretch) -> None:
        self._require_open()
        self._on_bpm = on_bpm
        self._on_stretch = on_stretch
        self._streams_active = True
        self._send(wire.Start())

    def stop_streams(self) -> None:
        if self._closed:
            return
        self._streams_active = False
        self._send(wire.Stop())

    def vibrate(self, pulse: VibrationPulse) -> None:
        self._require_open()
        self._send(
            wire.Vibrate(
                strength_255=round(pulse.strength * 255), duration_ms=pulse.duration_ms
            )
        )

    def swing(self) -> None:
        self._require_open()
        self._send(wire.Swing())

    def load_schedule(self, beat_pages: list[Page], swing_pages: list[Page]) -> int:
        self._require_open()
        link = _StreamLink(self.stream)
        sent = wire.transfer_schedule(beat_pages, link, kind=wire.PAGE_KIND_BEAT)
        sent += wire.transfer_schedule(
            swing_pages, link, kind=wire.PAGE_KIND_SWING, start_seq=sent % 256
        )
        return len(beat_pages) + len(swing_pages)

    def close(self) -> None:
        self._closed = True
        try:
            self.stream.close()
        except OSError:
            pass

    def _send(self, msg: wire.Message) -> None:
        self.stream.write(wire.encode(msg, self._seq))
        self._seq = (self._seq + 1) % 256

    def _require_open(self) -> None:
        if self._closed:
            raise BackendClosed("serial backend is closed")


class _StreamLink:
    """Blocking frame link used by the stop-and-wait page transfer."""

    def __init__(self, stream):
        self.stream = stream
        self._decoder = wire.FrameDecoder()
        self._frames: list[bytes] = []

    def send(self, frame: bytes) -> None:
        self.stream.write(frame)

    def recv(self, timeout_ms: int) -> Optional[bytes]:
        import time

        deadline = time.monotonic() + timeout_ms / 1000
        while time.monotonic() < deadline:
            chunk = self.stream.read(64)
            if chunk:
                for msg, seq in self._decoder.feed(chunk):
                    return wire.encode(msg, seq)
        return None
