import random

import pytest

from heartsway import wire
from heartsway.errors import (
    BadChecksum,
    NackReceived,
    PayloadTooLarge,
    TransferTimeout,
    Truncated,
)
from heartsway.replay import paginate


def all_message_samples():
    return [
        wire.BpmReport(t_rel_ms=123456, bpm_tenths=725),
        wire.StretchReport(t_rel_ms=99, value=512),
        wire.DistanceReport(cm=38.5),
        wire.SchedulePage(kind=wire.PAGE_KIND_BEAT, page_index=2, total_pages=7,
                          offsets=tuple(range(1000, 31000, 1000))),
        wire.SchedulePage(kind=wire.PAGE_KIND_SWING, page_index=0, total_pages=0, offsets=()),
        wire.Vibrate(strength_255=102, duration_ms=100),
        wire.Swing(),
        wire.Start(),
        wire.Stop(),
        wire.Ack(),
        wire.Nack(reason=wire.NACK_BUSY),
    ]


def test_vibrate_frame_layout():
    # 40% of full drive is 102/255; duration 100 ms little-endian.
    frame = wire.encode(wire.Vibrate(strength_255=102, duration_ms=100), seq=1)
    assert frame[0] == 0xAA
    assert frame[1] == 0x20  # Vibrate type code
    assert frame[2] == 0x01
    assert frame[3] == 3
    assert frame[4:7] == bytes([0x66, 0x64, 0x00])


def test_checksum_is_xor_fold():
    body = bytes([0x20, 0x01, 0x03, 0x66, 0x64, 0x00])
    assert wire.checksum(body) == 0x20
    frame = wire.encode(wire.Vibrate(strength_255=102, duration_ms=100), seq=1)
    assert frame[-1] == 0x20


def test_ack_is_five_bytes():
    frame = wire.encode(wire.Ack(), seq=7)
    assert len(frame) == 5
    assert wire.decode(frame) == (wire.Ack(), 7)


@pytest.mark.parametrize("msg", all_message_samples())
def test_round_trip_identity(msg):
    for seq in (0, 1, 255):
        assert wire.decode(wire.encode(msg, seq)) == (msg, seq)


def test_single_bit_flip_detected():
    frame = bytearray(wire.encode(wire.BpmReport(5000, 655), seq=9))
    for i in range(len(frame)):
        for bit in range(8):
            corrupted = bytearray(frame)
            corrupted[i] ^= 1 << bit
            with pytest.raises((BadChecksum, Truncated, wire.UnknownType)):
                wire.decode(bytes(corrupted))


def test_truncated_rejected():
    frame = wire.encode(wire.StretchReport(1, 2), seq=3)
    for cut in range(1, len(frame)):
        with pytest.raises(Truncated):
            wire.decode(frame[:cut])


def test_trailing_bytes_rejected():
    frame = wire.encode(wire.Swing(), seq=0)
    with pytest.raises(Truncated):
        wire.decode(frame + b"\x00")


def test_oversize_page_rejected():
    with pytest.raises(PayloadTooLarge):
        wire.encode(
            wire.SchedulePage(kind=0, page_index=0, total_pages=1, offsets=tuple(range(31))),
            seq=0,
        )


def test_stream_decoder_resyncs_after_corruption():
    frames = [wire.encode(m, i) for i, m in enumerate(all_message_samples())]
    junk = b"\x01\x02\xaa\x05"  # noise including a stray sync byte
    corrupted = bytearray(frames[0])
    corrupted[6] ^= 0xFF
    stream = junk + bytes(corrupted) + frames[1] + junk + frames[2] + frames[3]
    decoder = wire.FrameDecoder()
    out = decoder.feed(stream)
    msgs = [m for m, _ in out]
    assert all_message_samples()[1] in msgs
    assert all_message_samples()[2] in msgs
    assert all_message_samples()[3] in msgs
    assert all_message_samples()[0] not in msgs  # the corrupted one


def test_stream_decoder_handles_partial_feeds():
    msgs = all_message_samples()
    blob = b"".join(wire.encode(m, i) for i, m in enumerate(msgs))
    decoder = wire.FrameDecoder()
    out = []
    for i in range(0, len(blob), 3):
        out.extend(decoder.feed(blob[i : i + 3]))
    assert [m for m, _ in out] == msgs
    assert decoder.pending == 0


class ScriptedLink:
    """Test double: records frames, replies from a script."""

    def __init__(self, replies):
        self.sent = []
        self.replies = list(replies)

    def send(self, frame):
        self.sent.append(wire.decode(frame))

    def recv(self, timeout_ms):
        if not self.replies:
            return None
        reply = self.replies.pop(0)
        if reply is None:
            return None
        msg, seq_from_sent = reply
        seq = self.sent[-1][1] if seq_from_sent == "echo" else seq_from_sent
        return wire.encode(msg, seq)


def test_transfer_three_pages_stop_and_wait():
    pages = paginate(list(range(75)), 30)
    link = ScriptedLink([(wire.Ack(), "echo")] * 3)
    sent = wire.transfer_schedule(pages, link, kind=wire.PAGE_KIND_BEAT)
    assert sent == 3
    indexes = [m.page_index for m, _ in link.sent]
    assert indexes == [0, 1, 2]


def test_nack_causes_exactly_one_retransmission():
    pages = paginate(list(range(60)), 30)
    link = ScriptedLink(
        [(wire.Ack(), "echo"), (wire.Nack(1), "echo"), (wire.Ack(), "echo")]
    )
    sent = wire.transfer_schedule(pages, link, kind=wire.PAGE_KIND_BEAT)
    assert sent == 3  # page0, page1, page1 again
    indexes = [m.page_index for m, _ in link.sent]
    assert indexes == [0, 1, 1]


def test_silent_controller_times_out_after_three_attempts():
    pages = paginate(list(range(30)), 30)
    link = ScriptedLink([None, None, None])
    with pytest.raises(TransferTimeout):
        wire.transfer_schedule(pages, link, kind=wire.PAGE_KIND_BEAT)
    assert len(link.sent) == wire.SEND_ATTEMPTS == 3


def test_nack_on_final_attempt_raises():
    pages = paginate(list(range(30)), 30)
    link = ScriptedLink([(wire.Nack(2), "echo")] * 3)
    with pytest.raises(NackReceived):
        wire.transfer_schedule(pages, link, kind=wire.PAGE_KIND_BEAT)


def test_empty_schedule_sends_explicit_notice():
    link = ScriptedLink([(wire.Ack(), "echo")])
    sent = wire.transfer_schedule([], link, kind=wire.PAGE_KIND_SWING)
    assert sent == 1
    notice, _seq = link.sent[0]
    assert notice.total_pages == 0
    assert notice.offsets == ()


def random_message(rng: random.Random) -> wire.Message:
    choice = rng.randrange(10)
    if choice == 0:
        return wire.BpmReport(rng.randrange(2**32), rng.randrange(2**16))
    if choice == 1:
        return wire.StretchReport(rng.randrange(2**32), rng.randrange(2**16))
    if choice == 2:
        return wire.DistanceReport(rng.randrange(2**16) / 10.0)
    if choice == 3:
        count = rng.randrange(31)
        return wire.SchedulePage(
            kind=rng.randrange(2),
            page_index=rng.randrange(2**16),
            total_pages=rng.randrange(2**16),
            offsets=tuple(sorted(rng.sample(range(2**31), count))),
        )
    if choice == 4:
        return wire.Vibrate(rng.randrange(256), rng.randrange(2**16))
    if choice == 5:
        return wire.Swing()
    if choice == 6:
        return wire.Start()
    if choice == 7:
        return wire.Stop()
    if choice == 8:
        return wire.Ack()
    return wire.Nack(rng.randrange(256))


def test_fuzz_round_trip_small():
    rng = random.Random(1234)
    for _ in range(500):
        msg = random_message(rng)
        seq = rng.randrange(256)
        assert wire.decode(wire.encode(msg, seq)) == (msg, seq)
