"""Water-quality telemetry: sensor frame codec, calibration, assessment,
per-device aggregation, a TCP ingestion gateway and device simulators."""

__version__ = "0.1.0"

from .aggregation import RollingWindow, SiteAggregate, WindowStats, push_reading, rolling_window_mean, site_average
from .assessment import (
    QualityAssessment,
    Thresholds,
    assess_ph,
    assess_reading,
    assess_tds,
    assess_temperature,
    classify_turbidity,
)
from .calibration import (
    CalibrationConfig,
    Reading,
    adc_to_voltage,
    calibrate_ph_two_point,
    calibrate_reading,
    ec_to_tds,
    ph_from_hydrogen_activity,
    temperature_compensate_ec,
    voltage_to_ec,
    voltage_to_ph,
    voltage_to_temperature,
    voltage_to_turbidity,
)
from .frame import FrameKind, SensorFrame, compute_checksum, encode_frame, parse_frame
