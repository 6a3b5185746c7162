"""Classify calibrated readings into water-quality bands."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields

from .calibration import PH_RANGE, TEMP_RANGE_C, Reading
from .errors import ConfigError, DomainError

# Upper edges of the turbidity bands, NTU.
TURBIDITY_BOUNDS = (25.0, 35.0, 50.0)

# Canonical order of parameter names in violation lists and alerts.
PARAMETERS = ("temperature", "ph", "tds", "turbidity")


class PhStatus(str, enum.Enum):
    ACIDIC = "Acidic"
    IDEAL = "Ideal"
    ALKALINE = "Alkaline"


class TurbidityLevel(str, enum.Enum):
    MEDIUM_TURBID = "MediumTurbid"
    RATHER_TURBID = "RatherTurbid"
    MODERATE_TURBID = "ModerateTurbid"
    HIGHLY_TURBID = "HighlyTurbid"

    @property
    def ordinal(self) -> int:
        return list(TurbidityLevel).index(self)


class TempStatus(str, enum.Enum):
    NORMAL = "Normal"
    HIGH = "High"


class TdsStatus(str, enum.Enum):
    ACCEPTABLE = "Acceptable"
    ALARMING = "Alarming"


class Overall(str, enum.Enum):
    WITHIN_LIMITS = "WithinLimits"
    POLLUTED = "Polluted"


@dataclass(frozen=True)
class Thresholds:
    ph_ideal_lo: float = 6.0
    ph_ideal_hi: float = 8.0
    temp_high_c: float = 35.0
    tds_alarm_ppm: float = 170.0

    def __post_init__(self):
        if not self.ph_ideal_lo < self.ph_ideal_hi:
            raise ConfigError(f"ph_ideal_lo ({self.ph_ideal_lo}) must be < ph_ideal_hi ({self.ph_ideal_hi})")
        if not TEMP_RANGE_C[0] < self.temp_high_c <= TEMP_RANGE_C[1]:
            raise ConfigError(f"temp_high_c must lie in (-55, 125], got {self.temp_high_c}")
        if not self.tds_alarm_ppm >= 0:
            raise ConfigError(f"tds_alarm_ppm must be >= 0, got {self.tds_alarm_ppm}")

    @classmethod
    def from_dict(cls, data: dict) -> Thresholds:
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown threshold keys: {sorted(unknown)}")
        return cls(**data)


DEFAULT_THRESHOLDS = Thresholds()


@dataclass(frozen=True)
class QualityAssessment:
    ph_status: PhStatus
    turbidity_level: TurbidityLevel
    temp_status: TempStatus
    tds_status: TdsStatus
    overall: Overall
    violations: tuple[str, ...] = field(default=())

    def status_of(self, parameter: str) -> str:
        return {
            "temperature": self.temp_status,
            "ph": self.ph_status,
            "tds": self.tds_status,
            "turbidity": self.turbidity_level,
        }[parameter].value


def classify_turbidity(ntu: float) -> TurbidityLevel:
    """Band a turbidity value: [0,25) [25,35) [35,50] (50,inf)."""
    if not math.isfinite(ntu) or ntu < 0:
        raise DomainError(f"turbidity must be finite and >= 0, got {ntu}", channel="turbidity")
    if ntu < TURBIDITY_BOUNDS[0]:
        return TurbidityLevel.MEDIUM_TURBID
    if ntu < TURBIDITY_BOUNDS[1]:
        return TurbidityLevel.RATHER_TURBID
    # ">50" is strict, so 50 itself stays in the moderate band.
    if ntu <= TURBIDITY_BOUNDS[2]:
        return TurbidityLevel.MODERATE_TURBID
    return TurbidityLevel.HIGHLY_TURBID


def assess_ph(ph: float, thresholds: Thresholds = DEFAULT_THRESHOLDS) -> PhStatus:
    if not PH_RANGE[0] <= ph <= PH_RANGE[1]:
        raise DomainError(f"pH {ph} outside [0, 14]", channel="ph")
    if ph < thresholds.ph_ideal_lo:
        return PhStatus.ACIDIC
    if ph > thresholds.ph_ideal_hi:
        return PhStatus.ALKALINE
    return PhStatus.IDEAL


def assess_temperature(temp_c: float, thresholds: Thresholds = DEFAULT_THRESHOLDS) -> TempStatus:
    if not TEMP_RANGE_C[0] <= temp_c <= TEMP_RANGE_C[1]:
        raise DomainError(f"temperature {temp_c} degC outside sensor range", channel="temperature")
    return TempStatus.HIGH if temp_c > thresholds.temp_high_c else TempStatus.NORMAL


def assess_tds(tds_ppm: float, thresholds: Thresholds = DEFAULT_THRESHOLDS) -> TdsStatus:
    if not tds_ppm >= 0:
        raise DomainError(f"TDS must be >= 0, got {tds_ppm}", channel="tds")
    return TdsStatus.ALARMING if tds_ppm >= thresholds.tds_alarm_ppm else TdsStatus.ACCEPTABLE


def assess_reading(reading: Reading, thresholds: Thresholds = DEFAULT_THRESHOLDS) -> QualityAssessment:
    temp = assess_temperature(reading.temp_c, thresholds)
    ph = assess_ph(reading.ph, thresholds)
    tds = assess_tds(reading.tds_ppm, thresholds)
    turbidity = classify_turbidity(reading.turbidity_ntu)

    ok = {
        "temperature": temp is TempStatus.NORMAL,
        "ph": ph is PhStatus.IDEAL,
        "tds": tds is TdsStatus.ACCEPTABLE,
        "turbidity": turbidity is TurbidityLevel.MEDIUM_TURBID,
    }
    violations = tuple(p for p in PARAMETERS if not ok[p])
    overall = Overall.POLLUTED if violations else Overall.WITHIN_LIMITS
    return QualityAssessment(ph, turbidity, temp, tds, overall, violations)


def threshold_for(parameter: str, assessment: QualityAssessment, thresholds: Thresholds) -> float:
    """The limit a violated parameter crossed."""
    if parameter == "temperature":
        return thresholds.temp_high_c
    if parameter == "ph":
        return thresholds.ph_ideal_lo if assessment.ph_status is PhStatus.ACIDIC else thresholds.ph_ideal_hi
    if parameter == "tds":
        return thresholds.tds_alarm_ppm
    if parameter == "turbidity":
        return TURBIDITY_BOUNDS[0]
    raise KeyError(parameter)
