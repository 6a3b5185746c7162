from functools import reduce

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aquasense.errors import BadChecksum, InvalidFrame, LineTooLong, MalformedSyntax, RangeViolation
from aquasense.frame import (
    CHANNEL_RANGES,
    MAX_LINE_BYTES,
    FrameKind,
    SensorFrame,
    compute_checksum,
    encode_frame,
    parse_frame,
)


def xor_oracle(payload: bytes) -> str:
    acc = 0
    for b in payload:
        acc ^= b
    return "%02X" % acc


# Computed with xor_oracle before the codec existed.
EXAMPLE_PAYLOAD = b"WQ1,dev01,7,35000,512,430,287,120"
EXAMPLE_CHECKSUM = "63"


def frames():
    def build(kind, device_id, seq, uptime, data):
        channels = tuple(data.draw(st.integers(lo, hi)) for lo, hi in CHANNEL_RANGES[kind])
        return SensorFrame(kind, device_id, seq, uptime, channels)

    return st.builds(
        build,
        st.sampled_from(list(FrameKind)),
        st.from_regex(r"[A-Za-z0-9_-]{1,16}", fullmatch=True),
        st.integers(0, 2**32 - 1),
        st.integers(0, 2**64 - 1),
        st.data(),
    )


def test_checksum_examples():
    assert compute_checksum(b"") == "00"
    assert compute_checksum(b"A") == "41"
    assert xor_oracle(EXAMPLE_PAYLOAD) == EXAMPLE_CHECKSUM
    assert compute_checksum(EXAMPLE_PAYLOAD) == EXAMPLE_CHECKSUM


@given(st.binary(max_size=200))
def test_checksum_matches_fold(payload):
    assert compute_checksum(payload) == xor_oracle(payload)
    assert compute_checksum(payload) == format(reduce(int.__xor__, payload, 0), "02X")


def test_encode_wq1_example():
    frame = SensorFrame(FrameKind.RAW_ADC, "dev01", 7, 35000, (512, 430, 287, 120))
    assert encode_frame(frame) == b"$WQ1,dev01,7,35000,512,430,287,120*63\n"


def test_encode_wq2_site4_take1():
    frame = SensorFrame(FrameKind.FIXED_POINT, "site4", 0, 0, (3617, 8270, 17012, 2940))
    payload = b"WQ2,site4,0,0,3617,8270,17012,2940"
    assert encode_frame(frame) == b"$" + payload + b"*" + xor_oracle(payload).encode() + b"\n"


def test_encode_zero_frame():
    frame = SensorFrame(FrameKind.RAW_ADC, "z", 0, 0, (0, 0, 0, 0))
    payload = b"WQ1,z,0,0,0,0,0,0"
    assert encode_frame(frame) == b"$" + payload + b"*" + xor_oracle(payload).encode() + b"\n"


@pytest.mark.parametrize(
    "frame, field",
    [
        (SensorFrame(FrameKind.RAW_ADC, "dev01", 0, 0, (0, 0, 0, 1024)), "turbidity"),
        (SensorFrame(FrameKind.RAW_ADC, "", 0, 0, (0, 0, 0, 0)), "device_id"),
        (SensorFrame(FrameKind.RAW_ADC, "x" * 17, 0, 0, (0, 0, 0, 0)), "device_id"),
        (SensorFrame(FrameKind.RAW_ADC, "dev.1", 0, 0, (0, 0, 0, 0)), "device_id"),
        (SensorFrame(FrameKind.RAW_ADC, "dev01", 2**32, 0, (0, 0, 0, 0)), "seq"),
        (SensorFrame(FrameKind.RAW_ADC, "dev01", 0, -1, (0, 0, 0, 0)), "uptime_ms"),
        (SensorFrame(FrameKind.FIXED_POINT, "dev01", 0, 0, (-5501, 0, 0, 0)), "temperature"),
        (SensorFrame(FrameKind.FIXED_POINT, "dev01", 0, 0, (0, 14001, 0, 0)), "ph"),
        (SensorFrame(FrameKind.RAW_ADC, "dev01", 0, 0, (0, 0, 0)), "channels"),
    ],
)
def test_encode_rejects_invalid(frame, field):
    with pytest.raises(InvalidFrame) as info:
        encode_frame(frame)
    assert info.value.field == field


def test_parse_example_and_crlf():
    line = b"$WQ1,dev01,7,35000,512,430,287,120*63\n"
    expected = SensorFrame(FrameKind.RAW_ADC, "dev01", 7, 35000, (512, 430, 287, 120))
    assert parse_frame(line) == expected
    assert parse_frame(line[:-1] + b"\r\n") == expected
    assert parse_frame(line[:-1]) == expected


def _line(payload: bytes) -> bytes:
    return b"$" + payload + b"*" + compute_checksum(payload).encode() + b"\n"


def test_parse_range_violation_adc():
    with pytest.raises(RangeViolation) as info:
        parse_frame(_line(b"WQ1,dev01,7,35000,512,430,287,1500"))
    assert info.value.field == "turbidity"


@pytest.mark.parametrize(
    "payload, field",
    [
        (b"WQ1,dev01,07,35000,512,430,287,120", "seq"),
        (b"WQ1,dev01,+7,35000,512,430,287,120", "seq"),
        (b"WQ1,dev01, 7,35000,512,430,287,120", "seq"),
        (b"WQ2,dev01,7,35000,-0,430,287,120", "temperature"),
        (b"WQ1,dev01,7,35000,-1,430,287,120", "temperature"),
        (b"WQ1,dev01,7,35000,1.5,430,287,120", "temperature"),
        (b"WQ3,dev01,7,35000,512,430,287,120", "type"),
        (b"WQ1,dev 1,7,35000,512,430,287,120", "device_id"),
    ],
)
def test_parse_rejects_noncanonical(payload, field):
    with pytest.raises(MalformedSyntax) as info:
        parse_frame(_line(payload))
    assert info.value.field == field


def test_parse_rejects_field_count_and_delimiters():
    with pytest.raises(MalformedSyntax):
        parse_frame(_line(b"WQ1,dev01,7,35000,512,430,287"))
    with pytest.raises(MalformedSyntax) as info:
        parse_frame(b"WQ1,dev01,7,35000,512,430,287,120*63\n")
    assert info.value.offset == 0
    with pytest.raises(MalformedSyntax):
        parse_frame(b"$WQ1,dev01,7,35000,512,430,287,120\n")
    with pytest.raises(MalformedSyntax):
        parse_frame(b"$WQ1,dev01,7,35000,512,430,287,120*6a\n")
    with pytest.raises(MalformedSyntax):
        parse_frame(b"")


def test_parse_wq2_negative_temperature():
    frame = SensorFrame(FrameKind.FIXED_POINT, "cold", 1, 2, (-5500, 0, 0, 0))
    assert parse_frame(encode_frame(frame)) == frame


def test_line_too_long():
    with pytest.raises(LineTooLong):
        parse_frame(b"$" + b"1" * MAX_LINE_BYTES + b"*00\n")


def test_bad_checksum_reports_offset():
    line = b"$WQ1,dev01,7,35000,512,430,287,120*64\n"
    with pytest.raises(BadChecksum) as info:
        parse_frame(line)
    assert info.value.offset == line.index(b"*") + 1


@given(frames())
def test_round_trip(frame):
    line = encode_frame(frame)
    assert len(line) <= MAX_LINE_BYTES
    assert line.endswith(b"\n") and not line.endswith(b"\r\n")
    assert parse_frame(line) == frame
    assert encode_frame(frame) == line


@settings(max_examples=50)
@given(frames(), st.data())
def test_single_byte_corruption_is_bad_checksum(frame, data):
    line = encode_frame(frame)
    star = line.index(b"*")
    for pos in range(1, star):
        flip = data.draw(st.integers(1, 255))
        corrupted = bytearray(line)
        corrupted[pos] ^= flip
        with pytest.raises(BadChecksum):
            parse_frame(bytes(corrupted))


@given(st.binary(max_size=1024))
def test_parse_is_total(blob):
    from aquasense.errors import FrameError

    try:
        frame = parse_frame(blob)
    except FrameError:
        return
    assert isinstance(frame, SensorFrame)
