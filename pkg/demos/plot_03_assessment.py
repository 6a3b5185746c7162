"""
Assessing water quality
=======================

Every reading gets a status per parameter and an overall verdict. Any
parameter outside its healthy band is a violation and makes the sample
Polluted.
"""

from datetime import datetime, timezone

from aquasense import Reading, Thresholds, assess_reading, classify_turbidity

now = datetime.now(timezone.utc)

# Turbidity bands: <25 medium, 25-35 rather, 35-50 moderate, >50 highly turbid.
for ntu in (2.9, 25.0, 50.0, 50.1):
    print(f"{ntu:>5} NTU -> {classify_turbidity(ntu).value}")

# Averages from a river site: alkaline and high in dissolved solids.
site1 = Reading("Site-1", now, 0, temp_c=28.93, ph=9.57, tds_ppm=349.75, turbidity_ntu=1.95)
a = assess_reading(site1)
print(a.ph_status.value, a.tds_status.value, a.overall.value, a.violations)

# A clean sample passes every check.
clean = Reading("tap", now, 0, temp_c=25.0, ph=7.0, tds_ppm=50.0, turbidity_ntu=0.5)
print(assess_reading(clean).overall.value)

# Thresholds are configurable; tightening the temperature limit flags the same sample.
print(assess_reading(clean, Thresholds(temp_high_c=24.0)).violations)
