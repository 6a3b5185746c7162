"""Line-oriented sensor frame codec.

Wire format (one frame per line, ASCII)::

    $<TYPE>,<device_id>,<seq>,<uptime_ms>,<temp>,<ph>,<tds>,<turbidity>*<HH>\n

``TYPE`` is ``WQ1`` (raw 10-bit ADC counts) or ``WQ2`` (fixed-point physical
values: centi-degC, milli-pH, centi-ppm, milli-NTU).  ``HH`` is the XOR of
every byte strictly between ``$`` and ``*``, as two uppercase hex digits,
in the style of NMEA-0183.  A CR before the LF is tolerated on parse but
never emitted.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import reduce

from .errors import BadChecksum, InvalidFrame, LineTooLong, MalformedSyntax, RangeViolation

MAX_LINE_BYTES = 128
U32_MAX = 2**32 - 1
U64_MAX = 2**64 - 1

CHANNELS = ("temperature", "ph", "tds", "turbidity")

_DEVICE_ID_RE = re.compile(r"[A-Za-z0-9_-]{1,16}")
_UINT_RE = re.compile(rb"0|[1-9][0-9]*")
_INT_RE = re.compile(rb"0|-?[1-9][0-9]*")
_HEX_RE = re.compile(rb"[0-9A-F]{2}")


class FrameKind(enum.Enum):
    RAW_ADC = "WQ1"
    FIXED_POINT = "WQ2"


# Inclusive channel bounds, in channel order.
CHANNEL_RANGES: dict[FrameKind, tuple[tuple[int, int], ...]] = {
    FrameKind.RAW_ADC: ((0, 1023),) * 4,
    FrameKind.FIXED_POINT: (
        (-5500, 12500),  # centi-degC
        (0, 14000),  # milli-pH
        (0, 10_000_000),  # centi-ppm
        (0, 1_000_000),  # milli-NTU
    ),
}

# Divisors turning WQ2 integers into physical units.
FIXED_POINT_SCALE = (100, 1000, 100, 1000)


@dataclass(frozen=True)
class SensorFrame:
    """One wire message from a device."""

    kind: FrameKind
    device_id: str
    seq: int
    uptime_ms: int
    channels: tuple[int, int, int, int]

    def __post_init__(self):
        # Normalise lists to tuples so frames stay hashable and comparable.
        if not isinstance(self.channels, tuple):
            object.__setattr__(self, "channels", tuple(self.channels))


def _problem(frame: SensorFrame) -> tuple[str, str] | None:
    """Return ``(field, message)`` for the first violated invariant, if any."""
    if not isinstance(frame.kind, FrameKind):
        return "kind", f"unknown frame kind {frame.kind!r}"
    if not isinstance(frame.device_id, str) or not _DEVICE_ID_RE.fullmatch(frame.device_id):
        return "device_id", f"device_id {frame.device_id!r} must be 1-16 chars of [A-Za-z0-9_-]"
    for name, value, hi in (("seq", frame.seq, U32_MAX), ("uptime_ms", frame.uptime_ms, U64_MAX)):
        if not _is_int(value) or not 0 <= value <= hi:
            return name, f"{name}={value!r} outside [0, {hi}]"
    if len(frame.channels) != 4:
        return "channels", f"expected 4 channels, got {len(frame.channels)}"
    for name, value, (lo, hi) in zip(CHANNELS, frame.channels, CHANNEL_RANGES[frame.kind]):
        if not _is_int(value) or not lo <= value <= hi:
            return name, f"{name}={value!r} outside [{lo}, {hi}] for {frame.kind.value}"
    return None


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def compute_checksum(payload: bytes) -> str:
    """XOR of all payload bytes as two uppercase hex digits."""
    return format(reduce(lambda acc, b: acc ^ b, payload, 0), "02X")


def encode_frame(frame: SensorFrame) -> bytes:
    """Serialise *frame* to its canonical wire line (LF-terminated).

    Raises:
        InvalidFrame: if the frame violates any field invariant.
    """
    problem = _problem(frame)
    if problem is not None:
        field, message = problem
        raise InvalidFrame(message, field=field)
    fields = [frame.kind.value, frame.device_id, str(frame.seq), str(frame.uptime_ms)]
    fields.extend(str(c) for c in frame.channels)
    payload = ",".join(fields).encode("ascii")
    line = b"$" + payload + b"*" + compute_checksum(payload).encode("ascii") + b"\n"
    if len(line) > MAX_LINE_BYTES:  # unreachable with current field widths
        raise InvalidFrame(f"encoded line is {len(line)} bytes", field="line")
    return line


def parse_frame(line: bytes) -> SensorFrame:
    """Parse one wire line into a SensorFrame.

    The checksum is verified before any field is interpreted, so every
    single-byte corruption of the payload surfaces as BadChecksum.  A missing
    trailing LF is accepted.

    Raises:
        LineTooLong, MalformedSyntax, BadChecksum, RangeViolation
    """
    if isinstance(line, str):
        line = line.encode("utf-8", "surrogateescape")
    if len(line) > MAX_LINE_BYTES:
        raise LineTooLong(f"line is {len(line)} bytes, limit {MAX_LINE_BYTES}", offset=MAX_LINE_BYTES)

    body = line
    if body.endswith(b"\n"):
        body = body[:-1]
        if body.endswith(b"\r"):
            body = body[:-1]

    if not body.startswith(b"$"):
        raise MalformedSyntax("line does not start with '$'", offset=0)
    star = len(body) - 3
    if star < 1 or body[star : star + 1] != b"*":
        raise MalformedSyntax("missing '*' before the two-digit checksum", offset=max(star, 0))
    stored = body[star + 1 :]
    if not _HEX_RE.fullmatch(stored):
        raise MalformedSyntax(f"checksum {stored!r} is not two uppercase hex digits", offset=star + 1)

    payload = body[1:star]
    computed = compute_checksum(payload)
    if computed.encode("ascii") != stored:
        raise BadChecksum(
            f"checksum mismatch: stored {stored.decode('ascii')}, computed {computed}",
            offset=star + 1,
        )

    parts = payload.split(b",")
    if len(parts) != 8:
        raise MalformedSyntax(f"expected 8 fields, got {len(parts)}", offset=1)
    offsets = []
    pos = 1
    for part in parts:
        offsets.append(pos)
        pos += len(part) + 1

    try:
        kind = FrameKind(parts[0].decode("ascii"))
    except (UnicodeDecodeError, ValueError):
        raise MalformedSyntax(f"unknown frame type {parts[0]!r}", field="type", offset=offsets[0]) from None

    device_id = parts[1].decode("ascii", "replace")
    if not _DEVICE_ID_RE.fullmatch(device_id):
        raise MalformedSyntax(f"bad device_id {parts[1]!r}", field="device_id", offset=offsets[1])

    names = ("seq", "uptime_ms") + CHANNELS
    bounds = ((0, U32_MAX), (0, U64_MAX)) + CHANNEL_RANGES[kind]
    values = []
    for i, (name, raw, (lo, hi)) in enumerate(zip(names, parts[2:], bounds)):
        pattern = _INT_RE if lo < 0 else _UINT_RE
        if not pattern.fullmatch(raw):
            raise MalformedSyntax(f"{name} {raw!r} is not a canonical decimal", field=name, offset=offsets[i + 2])
        value = int(raw)
        if not lo <= value <= hi:
            raise RangeViolation(f"{name}={value} outside [{lo}, {hi}]", field=name, offset=offsets[i + 2])
        values.append(value)

    return SensorFrame(kind, device_id, values[0], values[1], tuple(values[2:]))
