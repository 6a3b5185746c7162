"""Raw ADC counts to physical quantities.

The ADC is modelled as a 10-bit converter on a 5 V reference.  Each sensor
channel has a linear transfer curve whose constants live in
:class:`CalibrationConfig`; TDS is estimated from conductivity with
``TDS = k_e * EC25`` after compensating EC to 25 degC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from datetime import datetime, timezone

from .errors import ConfigError, DegenerateCalibration, DomainError, RangeViolation, ValidationError
from .frame import FIXED_POINT_SCALE, FrameKind, SensorFrame

TEMP_RANGE_C = (-55.0, 125.0)
PH_RANGE = (0.0, 14.0)
K_E_RANGE = (0.55, 0.8)
LM35_SCALE = 100.0  # degC per volt


@dataclass(frozen=True)
class CalibrationConfig:
    vref: float = 5.0
    adc_max: int = 1023
    ph_slope: float = -5.70
    ph_intercept: float = 21.25
    ec_gain: float = 200.0
    k_e: float = 0.64
    alpha: float = 0.02
    turb_v0: float = 4.20
    turb_slope: float = 100.0

    def __post_init__(self):
        if not self.vref > 0:
            raise ConfigError(f"vref must be > 0, got {self.vref}")
        if not self.adc_max >= 1:
            raise ConfigError(f"adc_max must be >= 1, got {self.adc_max}")
        if not K_E_RANGE[0] <= self.k_e <= K_E_RANGE[1]:
            raise ConfigError(f"k_e must lie in [0.55, 0.8], got {self.k_e}")
        if not self.turb_slope > 0:
            raise ConfigError(f"turb_slope must be > 0, got {self.turb_slope}")
        if not self.ec_gain >= 0:
            raise ConfigError(f"ec_gain must be >= 0, got {self.ec_gain}")

    @property
    def lm35_scale(self) -> float:
        return LM35_SCALE

    @classmethod
    def from_dict(cls, data: dict) -> CalibrationConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown calibration keys: {sorted(unknown)}")
        return cls(**data)


DEFAULT_CALIBRATION = CalibrationConfig()


@dataclass(frozen=True)
class Reading:
    """A calibrated measurement set from one device."""

    device_id: str
    timestamp: datetime
    seq: int
    temp_c: float
    ph: float
    tds_ppm: float
    turbidity_ntu: float

    def check(self) -> Reading:
        """Raise ValidationError if any physical value is out of range."""
        _check_range("temperature", self.temp_c, TEMP_RANGE_C)
        _check_range("ph", self.ph, PH_RANGE)
        _check_range("tds", self.tds_ppm, (0.0, math.inf))
        _check_range("turbidity", self.turbidity_ntu, (0.0, math.inf))
        return self


def _check_range(channel: str, value: float, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    if math.isnan(value) or not lo <= value <= hi:
        raise ValidationError(f"{channel}={value} outside [{lo}, {hi}]", channel=channel)
    return value


def adc_to_voltage(counts: int, config: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    if not 0 <= counts <= config.adc_max:
        raise RangeViolation(f"ADC count {counts} outside [0, {config.adc_max}]", field="counts")
    return counts * config.vref / config.adc_max


def voltage_to_temperature(v: float, config: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    return _check_range("temperature", config.lm35_scale * v, TEMP_RANGE_C)


def ph_from_hydrogen_activity(activity: float) -> float:
    """pH as the negative base-10 log of hydrogen-ion activity (mol/L)."""
    if not activity > 0:
        raise DomainError(f"hydrogen-ion activity must be > 0, got {activity}", channel="ph")
    return -math.log10(activity)


def voltage_to_ph(v: float, config: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    # Out-of-range pH is reported, never clamped: it usually means a bad probe.
    return _check_range("ph", config.ph_slope * v + config.ph_intercept, PH_RANGE)


def calibrate_ph_two_point(v1: float, ph1: float, v2: float, ph2: float) -> tuple[float, float]:
    """Fit the pH line through two buffer-solution readings.

    Returns ``(ph_slope, ph_intercept)``.
    """
    if abs(v1 - v2) < 1e-9:
        raise DegenerateCalibration(f"calibration voltages {v1} and {v2} coincide")
    slope = (ph2 - ph1) / (v2 - v1)
    return slope, ph1 - slope * v1


def voltage_to_ec(v: float, config: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    """Conductivity in uS/cm from the TDS probe voltage."""
    return config.ec_gain * v


def temperature_compensate_ec(ec: float, temp_c: float, config: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    """Refer a conductivity measured at *temp_c* to 25 degC."""
    denom = 1.0 + config.alpha * (temp_c - 25.0)
    if not denom > 0:
        raise DomainError(f"compensation factor {denom:.4g} <= 0 at {temp_c} degC", channel="tds")
    return ec / denom


def ec_to_tds(ec25: float, config: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    if not K_E_RANGE[0] <= config.k_e <= K_E_RANGE[1]:
        raise ConfigError(f"k_e must lie in [0.55, 0.8], got {config.k_e}")
    return config.k_e * ec25


def voltage_to_turbidity(v: float, config: CalibrationConfig = DEFAULT_CALIBRATION) -> float:
    # Voltage falls as the water clouds; anything above the clean-water level is 0 NTU.
    return max(0.0, (config.turb_v0 - v) * config.turb_slope)


def calibrate_reading(
    frame: SensorFrame,
    config: CalibrationConfig = DEFAULT_CALIBRATION,
    now: datetime | None = None,
) -> Reading:
    """Turn a parsed frame into a validated Reading.

    WQ1 frames go through the full voltage pipeline; the temperature is
    computed first because EC compensation needs it.  WQ2 frames are only
    rescaled from fixed point.
    """
    if now is None:
        now = datetime.now(timezone.utc)
    if frame.kind is FrameKind.FIXED_POINT:
        temp_c, ph, tds, ntu = (c / s for c, s in zip(frame.channels, FIXED_POINT_SCALE))
    else:
        v_temp, v_ph, v_tds, v_turb = (adc_to_voltage(c, config) for c in frame.channels)
        temp_c = voltage_to_temperature(v_temp, config)
        ph = voltage_to_ph(v_ph, config)
        tds = ec_to_tds(temperature_compensate_ec(voltage_to_ec(v_tds, config), temp_c, config), config)
        ntu = voltage_to_turbidity(v_turb, config)
    reading = Reading(frame.device_id, now, frame.seq, temp_c, ph, tds, ntu)
    return reading.check()
