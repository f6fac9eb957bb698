import time

import pytest

from heartsway import wire
from heartsway.device import SerialBackend
from heartsway.errors import BackendClosed
from heartsway.replay import VibrationPulse, paginate
from heartsway.runtime import EventLoop, SystemClock


class DuplexStream:
    """In-memory stand-in for a tty: engine writes out, test scripts replies."""

    def __init__(self):
        self.written = bytearray()
        self.to_read = bytearray()
        self.closed = False

    def write(self, data: bytes):
        self.written.extend(data)

    def read(self, n: int) -> bytes:
        chunk = bytes(self.to_read[:n])
        del self.to_read[:n]
        if not chunk:
            time.sleep(0.01)
        return chunk

    def close(self):
        self.closed = True
        raise OSError("closed")  # mimics read() unblocking with an error


def decode_all(blob: bytes):
    return [m for m, _ in wire.FrameDecoder().feed(blob)]


@pytest.fixture
def backend():
    stream = DuplexStream()
    loop = EventLoop(SystemClock())
    return SerialBackend(loop, stream), stream, loop


def test_actuations_become_wire_messages(backend):
    be, stream, _ = backend
    be.vibrate(VibrationPulse())
    be.swing()
    msgs = decode_all(bytes(stream.written))
    assert msgs == [wire.Vibrate(strength_255=102, duration_ms=100), wire.Swing()]


def test_stream_control_messages(backend):
    be, stream, _ = backend
    be.start_streams(lambda s: None, lambda s: None)
    be.stop_streams()
    msgs = decode_all(bytes(stream.written))
    assert msgs == [wire.Start(), wire.Stop()]


def test_incoming_reports_dispatch_to_callbacks(backend):
    be, stream, loop = backend
    got_bpm, got_stretch = [], []
    be.start_streams(got_bpm.append, got_stretch.append)
    stream.to_read.extend(wire.encode(wire.BpmReport(t_rel_ms=10, bpm_tenths=725), 1))
    stream.to_read.extend(wire.encode(wire.StretchReport(t_rel_ms=20, value=333), 2))
    stream.to_read.extend(wire.encode(wire.DistanceReport(cm=35.0), 3))
    be.start_reader()
    deadline = time.time() + 2
    while time.time() < deadline and not (got_bpm and got_stretch):
        loop.call_later(1, loop.stop)
        loop.run()
    assert got_bpm and got_bpm[0].bpm == 72.5
    assert got_stretch and got_stretch[0].value == 333.0
    assert be.read_distance() == 35.0
    be.close()


def test_load_schedule_transfers_pages_with_acks(backend):
    be, stream, _ = backend

    class AckingStream(DuplexStream):
        def write(self, data):
            super().write(data)
            for msg, seq in wire.FrameDecoder().feed(data):
                if isinstance(msg, wire.SchedulePage):
                    self.to_read.extend(wire.encode(wire.Ack(), seq))

    acking = AckingStream()
    be.stream = acking
    pages = paginate(list(range(45)), 30)
    assert be.load_schedule(pages, []) == 2
    sent = decode_all(bytes(acking.written))
    page_msgs = [m for m in sent if isinstance(m, wire.SchedulePage)]
    # two beat pages plus the explicit empty swing-schedule notice
    assert [p.page_index for p in page_msgs] == [0, 1, 0]
    assert page_msgs[-1].total_pages == 0


def test_closed_backend_refuses(backend):
    be, stream, _ = backend
    be.close()
    with pytest.raises(BackendClosed):
        be.vibrate(VibrationPulse())
