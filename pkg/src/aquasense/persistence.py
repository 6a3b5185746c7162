"""Append-only JSONL logs for readings and alerts.

Each record is written with a single ``os.write`` on an ``O_APPEND`` file
descriptor, so lines never interleave.  If a previous process died mid-line,
the torn tail is truncated on open so every line in the file parses.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .assessment import QualityAssessment, Thresholds, threshold_for
from .calibration import Reading
from .errors import PersistenceFailure

log = logging.getLogger(__name__)

READING_KEYS = (
    "ts", "device_id", "seq", "temp_c", "ph", "tds_ppm", "turbidity_ntu",
    "ph_status", "turbidity_level", "temp_status", "tds_status", "overall", "violations",
)  # fmt: skip
ALERT_KEYS = ("ts", "device_id", "parameter", "value", "threshold", "status")


def format_ts(ts: datetime) -> str:
    """ISO-8601 UTC with millisecond precision, e.g. ``2024-01-02T03:04:05.678Z``."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}Z"


def parse_ts(text: str) -> datetime:
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text).astimezone(timezone.utc)


def reading_record(reading: Reading, assessment: QualityAssessment) -> dict:
    return {
        "ts": format_ts(reading.timestamp),
        "device_id": reading.device_id,
        "seq": reading.seq,
        "temp_c": reading.temp_c,
        "ph": reading.ph,
        "tds_ppm": reading.tds_ppm,
        "turbidity_ntu": reading.turbidity_ntu,
        "ph_status": assessment.ph_status.value,
        "turbidity_level": assessment.turbidity_level.value,
        "temp_status": assessment.temp_status.value,
        "tds_status": assessment.tds_status.value,
        "overall": assessment.overall.value,
        "violations": list(assessment.violations),
    }


def reading_from_record(record: dict) -> Reading:
    """Inverse of :func:`reading_record` for the measurement fields."""
    missing = [k for k in READING_KEYS if k not in record]
    if missing:
        raise KeyError(f"missing keys {missing}")
    return Reading(
        device_id=str(record["device_id"]),
        timestamp=parse_ts(record["ts"]),
        seq=int(record["seq"]),
        temp_c=float(record["temp_c"]),
        ph=float(record["ph"]),
        tds_ppm=float(record["tds_ppm"]),
        turbidity_ntu=float(record["turbidity_ntu"]),
    )


@dataclass(frozen=True)
class AlertEvent:
    timestamp: datetime
    device_id: str
    parameter: str
    value: float
    threshold: float
    status: str

    def record(self) -> dict:
        return {
            "ts": format_ts(self.timestamp),
            "device_id": self.device_id,
            "parameter": self.parameter,
            "value": self.value,
            "threshold": self.threshold,
            "status": self.status,
        }


_VALUE_OF = {"temperature": "temp_c", "ph": "ph", "tds": "tds_ppm", "turbidity": "turbidity_ntu"}


def alerts_for(reading: Reading, assessment: QualityAssessment, thresholds: Thresholds) -> list[AlertEvent]:
    return [
        AlertEvent(
            reading.timestamp,
            reading.device_id,
            parameter,
            getattr(reading, _VALUE_OF[parameter]),
            threshold_for(parameter, assessment, thresholds),
            assessment.status_of(parameter),
        )
        for parameter in assessment.violations
    ]


class JsonlAppender:
    """Single-writer append handle for one JSONL file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._repair_tail()
            self._fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        except OSError as exc:
            raise PersistenceFailure(self.path, exc.strerror or str(exc)) from exc
        self.lines_written = 0

    def _repair_tail(self) -> None:
        if not self.path.exists():
            return
        with open(self.path, "rb+") as f:
            size = f.seek(0, os.SEEK_END)
            if size == 0:
                return
            f.seek(size - 1)
            if f.read(1) == b"\n":
                return
            # Walk back to the last complete line and drop the fragment.
            pos = size
            while pos > 0:
                step = min(4096, pos)
                f.seek(pos - step)
                chunk = f.read(step)
                nl = chunk.rfind(b"\n")
                if nl >= 0:
                    pos = pos - step + nl + 1
                    break
                pos -= step
            log.warning("%s: truncating torn final line (%d bytes)", self.path, size - pos)
            f.truncate(pos)

    def append(self, record: dict) -> None:
        data = (json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")
        try:
            written = os.write(self._fd, data)
        except OSError as exc:
            raise PersistenceFailure(self.path, exc.strerror or str(exc)) from exc
        if written != len(data):
            raise PersistenceFailure(self.path, f"short write ({written} of {len(data)} bytes)")
        self.lines_written += 1

    def close(self) -> None:
        if self._fd is None:
            return
        try:
            os.fsync(self._fd)
        except OSError:
            pass
        os.close(self._fd)
        self._fd = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def persist_reading(reading: Reading, assessment: QualityAssessment, path: str | Path | JsonlAppender) -> dict:
    """Append one reading record; *path* may be an open appender."""
    record = reading_record(reading, assessment)
    if isinstance(path, JsonlAppender):
        path.append(record)
    else:
        with JsonlAppender(path) as out:
            out.append(record)
    return record


def emit_alerts(
    reading: Reading,
    assessment: QualityAssessment,
    thresholds: Thresholds,
    path: str | Path | JsonlAppender | None = None,
) -> list[AlertEvent]:
    """One AlertEvent per violated parameter, appended to *path* and logged."""
    events = alerts_for(reading, assessment, thresholds)
    if not events:
        return events
    out = path if isinstance(path, JsonlAppender) or path is None else JsonlAppender(path)
    try:
        for event in events:
            log.warning(
                "ALERT %s %s=%s (%s, limit %s)",
                event.device_id, event.parameter, event.value, event.status, event.threshold,
            )  # fmt: skip
            if out is not None:
                out.append(event.record())
    finally:
        if out is not None and out is not path:
            out.close()
    return events
