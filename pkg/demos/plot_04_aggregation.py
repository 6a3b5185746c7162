"""
Per-device statistics
=====================

The gateway keeps cumulative count/mean/min/max per device and drops frames
whose sequence number is not newer than the last one seen.
"""

from datetime import datetime, timezone

from aquasense import RollingWindow, SiteAggregate
from aquasense.aggregation import round_half_up
from aquasense.calibration import Reading
from aquasense.errors import StaleSequence

now = datetime.now(timezone.utc)
temps = (28.84, 29.81, 32.26, 25.90, 27.86)

agg = SiteAggregate("Site-1")
for seq, t in enumerate(temps):
    agg.push(Reading("Site-1", now, seq, t, 9.5, 350.0, 1.9))
stats = agg.stats
print("count", stats.count, "mean temp", round_half_up(stats.mean["temp_c"]))
print("min/max", stats.min["temp_c"], stats.max["temp_c"])

# A replayed sequence number is rejected and leaves the statistics untouched.
try:
    agg.push(Reading("Site-1", now, 2, 99.0, 9.5, 350.0, 1.9))
except StaleSequence as exc:
    print("dropped:", exc)

# A rolling window only looks at the last N readings.
window = RollingWindow(3)
for seq, t in enumerate(temps):
    s = window.push(Reading("Site-1", now, seq, t, 9.5, 350.0, 1.9))
    print(f"after {t:5.2f}: window mean {s.mean['temp_c']:.3f} over {s.count}")
