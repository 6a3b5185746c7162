"""Per-device statistics: cumulative aggregates and short rolling windows."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

import numpy as np

from .calibration import Reading
from .errors import EmptyInput, StaleSequence

FIELDS = ("temp_c", "ph", "tds_ppm", "turbidity_ntu")
SEQ_MODULUS = 2**32
SEQ_HALF = 2**31


def reading_values(reading: Reading) -> tuple[float, float, float, float]:
    return tuple(getattr(reading, f) for f in FIELDS)


def round_half_up(value: float, places: int = 2) -> Decimal:
    """Display rounding; works from the shortest repr so 1.945 -> 1.95."""
    return Decimal(repr(float(value))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def seq_is_newer(seq: int, last_seq: int) -> bool:
    """True if *seq* follows *last_seq* within half the u32 space (wrap-aware)."""
    return 0 < (seq - last_seq) % SEQ_MODULUS < SEQ_HALF


@dataclass
class WindowStats:
    """count/mean/min/max for each of the four parameters."""

    count: int = 0
    mean: dict[str, float] = field(default_factory=dict)
    min: dict[str, float] = field(default_factory=dict)
    max: dict[str, float] = field(default_factory=dict)
    window_len: int | None = None

    @classmethod
    def from_values(cls, rows: np.ndarray, window_len: int | None = None) -> WindowStats:
        if len(rows) == 0:
            return cls(window_len=window_len)
        rows = np.asarray(rows, dtype=float).reshape(-1, len(FIELDS))
        mean = {f: math.fsum(rows[:, i]) / len(rows) for i, f in enumerate(FIELDS)}
        return cls(
            count=len(rows),
            mean=mean,
            min=dict(zip(FIELDS, rows.min(axis=0).tolist())),
            max=dict(zip(FIELDS, rows.max(axis=0).tolist())),
            window_len=window_len,
        )


class RollingWindow:
    """Fixed-capacity window; the mean is recomputed from the retained samples."""

    def __init__(self, window_len: int = 5):
        if window_len < 1:
            raise ValueError(f"window_len must be >= 1, got {window_len}")
        self.window_len = window_len
        self._samples: deque[tuple[float, ...]] = deque(maxlen=window_len)

    def push(self, reading: Reading) -> WindowStats:
        self._samples.append(reading_values(reading))
        return self.stats()

    def stats(self) -> WindowStats:
        return WindowStats.from_values(np.array(self._samples), self.window_len)


def rolling_window_mean(window: RollingWindow, reading: Reading) -> WindowStats:
    return window.push(reading)


class SiteAggregate:
    """Cumulative statistics for one device or site id.

    Duplicate or out-of-order sequence numbers raise StaleSequence and leave
    the aggregate untouched.
    """

    def __init__(self, site_id: str, *, check_seq: bool = True):
        self.site_id = site_id
        self.check_seq = check_seq
        self.count = 0
        self.last_seq: int | None = None
        self.last_timestamp: datetime | None = None
        self._sums = [0.0] * len(FIELDS)
        self._min = [math.inf] * len(FIELDS)
        self._max = [-math.inf] * len(FIELDS)

    def push(self, reading: Reading) -> None:
        if reading.device_id != self.site_id:
            raise ValueError(f"reading from {reading.device_id!r} pushed into aggregate {self.site_id!r}")
        if self.check_seq and self.last_seq is not None and not seq_is_newer(reading.seq, self.last_seq):
            raise StaleSequence(reading.device_id, reading.seq, self.last_seq)
        for i, value in enumerate(reading_values(reading)):
            self._sums[i] += value
            self._min[i] = min(self._min[i], value)
            self._max[i] = max(self._max[i], value)
        self.count += 1
        if self.last_seq is None or seq_is_newer(reading.seq, self.last_seq):
            self.last_seq = reading.seq
        self.last_timestamp = reading.timestamp

    @property
    def stats(self) -> WindowStats:
        if not self.count:
            return WindowStats()
        mean = {}
        for i, f in enumerate(FIELDS):
            # Clamp guards against a 1-ulp excursion when all samples are equal.
            mean[f] = min(max(self._sums[i] / self.count, self._min[i]), self._max[i])
        return WindowStats(
            count=self.count,
            mean=mean,
            min=dict(zip(FIELDS, self._min)),
            max=dict(zip(FIELDS, self._max)),
        )


def push_reading(agg: SiteAggregate, reading: Reading) -> SiteAggregate:
    agg.push(reading)
    return agg


def site_average(samples: Sequence[Reading]) -> dict[str, float]:
    """Full-precision arithmetic mean of each parameter."""
    if not samples:
        raise EmptyInput("site_average needs at least one reading")
    n = len(samples)
    return {f: math.fsum(getattr(r, f) for r in samples) / n for f in FIELDS}


def site_of(device_id: str) -> str:
    """Site a device belongs to: the part of the id before the first '_'."""
    return device_id.split("_", 1)[0]


def group_stats(readings: Iterable[Reading], key=lambda r: r.device_id) -> dict[str, WindowStats]:
    groups: dict[str, list[tuple[float, ...]]] = {}
    for r in readings:
        groups.setdefault(key(r), []).append(reading_values(r))
    return {k: WindowStats.from_values(np.array(v)) for k, v in sorted(groups.items())}
