"""
Encoding and parsing sensor frames
==================================

Devices send one ASCII line per sample. The checksum is the XOR of every
byte between ``$`` and ``*``, written as two uppercase hex digits.
"""

from aquasense import FrameKind, SensorFrame, compute_checksum, encode_frame, parse_frame
from aquasense.errors import BadChecksum

# A raw-ADC frame: four 10-bit counts for temperature, pH, TDS and turbidity.
frame = SensorFrame(FrameKind.RAW_ADC, "dev01", seq=7, uptime_ms=35000, channels=(512, 430, 287, 120))
line = encode_frame(frame)
print(line)
print("checksum:", compute_checksum(b"WQ1,dev01,7,35000,512,430,287,120"))

# Parsing is the exact inverse.
assert parse_frame(line) == frame

# Fixed-point frames carry physical values already scaled to integers:
# centi-degrees, milli-pH, centi-ppm and milli-NTU.
print(parse_frame(b"$WQ2,site4,0,0,3617,8270,17012,2940*13\n"))

# Flipping any single payload byte is caught by the checksum.
bad = bytearray(line)
bad[10] ^= 0x01
try:
    parse_frame(bytes(bad))
except BadChecksum as exc:
    print("rejected:", exc)
