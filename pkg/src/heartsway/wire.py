"""Host <-> controller framing: sensor reports up, schedule pages and
actuation commands down.

Frame layout (little-endian multi-byte integers):

    [0xAA sync][msg_type:1][seq:1][payload_len:1][payload:n][checksum:1]

checksum = XOR of msg_type..payload end (sync excluded).  The payload is
bounded at 128 bytes, just enough for a full 30-offset schedule page; the
stop-and-wait transfer keeps at most one in-flight page per kind, so the
controller never buffers more than one page of each.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import (
    BadChecksum,
    NackReceived,
    PayloadTooLarge,
    TransferTimeout,
    Truncated,
    UnknownType,
)

SYNC = 0xAA
MAX_PAYLOAD = 128
HEADER_LEN = 4  # sync, type, seq, len

ACK_TIMEOUT_MS = 500
SEND_ATTEMPTS = 3

# message type codes
T_BPM_REPORT = 0x01
T_STRETCH_REPORT = 0x02
T_DISTANCE_REPORT = 0x03
T_SCHEDULE_PAGE = 0x10
T_VIBRATE = 0x20
T_SWING = 0x21
T_START = 0x30
T_STOP = 0x31
T_ACK = 0x40
T_NACK = 0x41

PAGE_KIND_BEAT = 0
PAGE_KIND_SWING = 1

NACK_BUSY = 0x01
NACK_BAD_PAGE = 0x02


@dataclass(frozen=True)
class BpmReport:
    """BPM travels as integer tenths so the controller never parses floats."""

    t_rel_ms: int
    bpm_tenths: int


@dataclass(frozen=True)
class StretchReport:
    t_rel_ms: int
    value: int


@dataclass(frozen=True)
class DistanceReport:
    cm: float  # quantized to 0.1 cm on the wire


@dataclass(frozen=True)
class SchedulePage:
    kind: int  # PAGE_KIND_BEAT or PAGE_KIND_SWING
    page_index: int
    total_pages: int
    offsets: tuple[int, ...]


@dataclass(frozen=True)
class Vibrate:
    strength_255: int
    duration_ms: int


@dataclass(frozen=True)
class Swing:
    pass


@dataclass(frozen=True)
class Start:
    pass


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class Ack:
    pass


@dataclass(frozen=True)
class Nack:
    reason: int


Message = (
    BpmReport
    | StretchReport
    | DistanceReport
    | SchedulePage
    | Vibrate
    | Swing
    | Start
    | Stop
    | Ack
    | Nack
)


def _encode_payload(msg: Message) -> tuple[int, bytes]:
    if isinstance(msg, BpmReport):
        return T_BPM_REPORT, struct.pack("<IH", msg.t_rel_ms, msg.bpm_tenths)
    if isinstance(msg, StretchReport):
        return T_STRETCH_REPORT, struct.pack("<IH", msg.t_rel_ms, msg.value)
    if isinstance(msg, DistanceReport):
        return T_DISTANCE_REPORT, struct.pack("<H", round(msg.cm * 10))
    if isinstance(msg, SchedulePage):
        if len(msg.offsets) > 30:
            raise PayloadTooLarge("schedule page holds at most 30 offsets")
        return T_SCHEDULE_PAGE, struct.pack(
            f"<BHHB{len(msg.offsets)}I",
            msg.kind,
            msg.page_index,
            msg.total_pages,
            len(msg.offsets),
            *msg.offsets,
        )
    if isinstance(msg, Vibrate):
        return T_VIBRATE, struct.pack("<BH", msg.strength_255, msg.duration_ms)
    if isinstance(msg, Swing):
        return T_SWING, b""
    if isinstance(msg, Start):
        return T_START, b""
    if isinstance(msg, Stop):
        return T_STOP, b""
    if isinstance(msg, Ack):
        return T_ACK, b""
    if isinstance(msg, Nack):
        return T_NACK, struct.pack("<B", msg.reason)
    raise TypeError(f"not a wire message: {msg!r}")


def _decode_payload(msg_type: int, payload: bytes) -> Message:
    try:
        if msg_type == T_BPM_REPORT:
            t, tenths = struct.unpack("<IH", payload)
            return BpmReport(t, tenths)
        if msg_type == T_STRETCH_REPORT:
            t, value = struct.unpack("<IH", payload)
            return StretchReport(t, value)
        if msg_type == T_DISTANCE_REPORT:
            (mm,) = struct.unpack("<H", payload)
            return DistanceReport(mm / 10.0)
        if msg_type == T_SCHEDULE_PAGE:
            kind, page_index, total, count = struct.unpack_from("<BHHB", payload)
            offsets = struct.unpack_from(f"<{count}I", payload, 6)
            if len(payload) != 6 + 4 * count:
                raise Truncated("schedule page length mismatch")
            return SchedulePage(kind, page_index, total, tuple(offsets))
        if msg_type == T_VIBRATE:
            strength, duration = struct.unpack("<BH", payload)
            return Vibrate(strength, duration)
        if msg_type == T_SWING:
            _expect_empty(payload)
            return Swing()
        if msg_type == T_START:
            _expect_empty(payload)
            return Start()
        if msg_type == T_STOP:
            _expect_empty(payload)
            return Stop()
        if msg_type == T_ACK:
            _expect_empty(payload)
            return Ack()
        if msg_type == T_NACK:
            (reason,) = struct.unpack("<B", payload)
            return Nack(reason)
    except struct.error as exc:
        raise Truncated(f"payload does not match type 0x{msg_type:02X}: {exc}") from exc
    raise UnknownType(f"0x{msg_type:02X}")


def _expect_empty(payload: bytes) -> None:
    if payload:
        raise Truncated("unexpected payload on empty-bodied message")


def checksum(body: bytes) -> int:
    """XOR fold over msg_type..payload end."""
    c = 0
    for b in body:
        c ^= b
    return c


def encode(msg: Message, seq: int) -> bytes:
    """Encode one message into a complete frame."""
    if not 0 <= seq <= 0xFF:
        raise ValueError("seq must fit one byte")
    msg_type, payload = _encode_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise PayloadTooLarge(f"{len(payload)} > {MAX_PAYLOAD}")
    body = bytes([msg_type, seq, len(payload)]) + payload
    return bytes([SYNC]) + body + bytes([checksum(body)])


def decode(frame: bytes) -> tuple[Message, int]:
    """Decode a buffer holding exactly one frame.

    Rejects anything else: missing sync, bad checksum, unknown type, short
    buffers, and trailing bytes all raise.  Strictness is what makes every
    single-byte corruption detectable.
    """
    if len(frame) < HEADER_LEN + 1:
        raise Truncated(f"{len(frame)} bytes is below minimum frame size")
    if frame[0] != SYNC:
        raise Truncated("missing sync byte")
    payload_len = frame[3]
    end = HEADER_LEN + payload_len + 1
    if len(frame) < end:
        raise Truncated("frame shorter than its declared payload")
    if len(frame) > end:
        raise Truncated("trailing bytes after frame")
    body = frame[1 : end - 1]
    if checksum(body) != frame[end - 1]:
        raise BadChecksum(f"expected 0x{checksum(body):02X}, got 0x{frame[end - 1]:02X}")
    msg = _decode_payload(frame[1], frame[4 : 4 + payload_len])
    return msg, frame[2]


class FrameDecoder:
    """Incremental decoder for a byte stream with resynchronization.

    feed() returns every complete valid frame found; corrupted or partial
    junk is skipped by scanning forward to the next sync byte.
    """

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[tuple[Message, int]]:
        self._buf.extend(data)
        out = []
        while True:
            start = self._buf.find(bytes([SYNC]))
            if start < 0:
                self._buf.clear()
                break
            if start > 0:
                del self._buf[:start]
            if len(self._buf) < HEADER_LEN + 1:
                break  # wait for more bytes
            end = HEADER_LEN + self._buf[3] + 1
            if len(self._buf) < end:
                break
            try:
                out.append(decode(bytes(self._buf[:end])))
                del self._buf[:end]
            except (BadChecksum, UnknownType, Truncated):
                # drop this sync byte and rescan: resynchronize
                del self._buf[0]
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)


def transfer_schedule(pages, link, *, kind: int, start_seq: int = 0) -> int:
    """Send schedule pages stop-and-wait; returns the count of frames sent
    (including retransmissions).

    Each page must be acknowledged before the next goes out, so the
    controller holds at most one in-flight page per kind.  A silent
    controller costs SEND_ATTEMPTS windows of ACK_TIMEOUT_MS before
    TransferTimeout; a Nack on the final attempt raises NackReceived.
    An empty page list sends one explicit empty-schedule notice.

    `link` needs send(frame_bytes) and recv(timeout_ms) -> frame bytes or
    None.
    """
    messages = [
        SchedulePage(kind=kind, page_index=p.index, total_pages=p.total, offsets=p.offsets)
        for p in pages
    ]
    if not messages:
        messages = [SchedulePage(kind=kind, page_index=0, total_pages=0, offsets=())]

    sent = 0
    seq = start_seq
    for msg in messages:
        frame = encode(msg, seq)
        acked = False
        for attempt in range(SEND_ATTEMPTS):
            link.send(frame)
            sent += 1
            reply = link.recv(ACK_TIMEOUT_MS)
            if reply is None:
                continue
            try:
                reply_msg, reply_seq = decode(reply)
            except (BadChecksum, UnknownType, Truncated):
                continue
            if reply_seq != seq:
                continue
            if isinstance(reply_msg, Ack):
                acked = True
                break
            if isinstance(reply_msg, Nack) and attempt == SEND_ATTEMPTS - 1:
                raise NackReceived(f"page {msg.page_index} rejected: {reply_msg.reason}")
        if not acked:
            raise TransferTimeout(
                f"page {msg.page_index}: no ack after {SEND_ATTEMPTS} attempts"
            )
        seq = (seq + 1) % 256
    return sent
