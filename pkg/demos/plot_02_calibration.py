"""
From ADC counts to physical units
=================================

Each channel goes counts -> volts -> engineering units. TDS additionally
needs the temperature, because conductivity is referenced to 25 degC.
"""

import numpy as np

from aquasense import CalibrationConfig, FrameKind, SensorFrame, calibrate_reading
from aquasense.calibration import (
    adc_to_voltage,
    ec_to_tds,
    ph_from_hydrogen_activity,
    temperature_compensate_ec,
    voltage_to_ec,
    voltage_to_ph,
    voltage_to_temperature,
    voltage_to_turbidity,
)

counts = np.array([0, 51, 512, 859, 1023])
volts = [adc_to_voltage(int(c)) for c in counts]
print("volts:", np.round(volts, 4))

# LM35 temperature probe: 10 mV per degree.
print("temp  @ 0.25 V:", voltage_to_temperature(0.25))
# pH probe: linear, about 7 at mid-scale.
print("pH    @ 2.50 V:", round(voltage_to_ph(2.5), 3))
# pH is -log10 of hydrogen-ion activity.
print("pH of 1e-7 activity:", ph_from_hydrogen_activity(1e-7))
# Turbidity falls as the photodiode voltage rises; clean water sits near 4.2 V.
print("NTU   @ 4.18 V:", round(voltage_to_turbidity(4.18), 3))

# Conductivity is compensated to 25 degC before converting with k_e.
ec = voltage_to_ec(1.0)
for temp in (15.0, 25.0, 35.0):
    ec25 = temperature_compensate_ec(ec, temp)
    print(f"EC {ec:.0f} uS/cm at {temp} degC -> EC25 {ec25:.1f} -> TDS {ec_to_tds(ec25):.1f} ppm")

# k_e is configurable inside [0.55, 0.8].
high_k = CalibrationConfig(k_e=0.8)
print("TDS with k_e=0.8:", ec_to_tds(200.0, high_k))

# The whole chain in one call.
frame = SensorFrame(FrameKind.RAW_ADC, "dev01", 0, 0, (59, 480, 150, 855))
print(calibrate_reading(frame))
