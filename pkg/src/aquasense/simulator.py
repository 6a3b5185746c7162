"""Simulated sensor devices.

Two sources of frames:

* live synthesis (WQ1): physical base values plus gaussian noise are pushed
  back through the default calibration curves and quantised to ADC counts;
* fixture replay (WQ2): rows of field data are sent as exact fixed-point
  values so table averages survive the trip bit for bit.

:func:`run_device` streams either source to a gateway over TCP at a fixed
cadence, reconnecting with exponential backoff.
"""

from __future__ import annotations

import asyncio
import csv
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from .calibration import DEFAULT_CALIBRATION, PH_RANGE, TEMP_RANGE_C, CalibrationConfig
from .errors import ConfigError, ConnectionRefused, FixtureParseError, InversionOutOfRange
from .frame import FIXED_POINT_SCALE, U32_MAX, FrameKind, SensorFrame, encode_frame

log = logging.getLogger(__name__)

DEFAULT_CADENCE_MS = 5000
FIXTURE_HEADER = ["site", "take", "temp_c", "ph", "tds_ppm", "turbidity_ntu"]
FIXTURE_SITES = ("Site-1", "Site-2", "Site-3", "Site-4")
PARAMS = ("temp_c", "ph", "tds_ppm", "turbidity_ntu")

BACKOFF_INITIAL_S = 1.0
BACKOFF_CAP_S = 30.0


@dataclass(frozen=True)
class DeviceProfile:
    device_id: str
    cadence_ms: int = DEFAULT_CADENCE_MS
    base: dict[str, float] = field(
        default_factory=lambda: {"temp_c": 25.0, "ph": 7.0, "tds_ppm": 100.0, "turbidity_ntu": 1.0}
    )
    noise_sigma: dict[str, float] = field(default_factory=lambda: dict.fromkeys(PARAMS, 0.0))
    rng_seed: int = 0

    def __post_init__(self):
        if self.cadence_ms < 1:
            raise ConfigError(f"cadence_ms must be >= 1, got {self.cadence_ms}")
        for name in PARAMS:
            if name not in self.base:
                raise ConfigError(f"profile base is missing {name!r}")
            if self.noise_sigma.get(name, 0.0) < 0:
                raise ConfigError(f"noise_sigma[{name!r}] must be >= 0")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed must be an unsigned 64-bit integer")

    @classmethod
    def from_dict(cls, data: dict, device_id: str, rng_seed: int = 0) -> DeviceProfile:
        """Build a profile from a JSON-style mapping (``cadence_ms``, ``base``, ``noise_sigma``)."""
        unknown = set(data) - {"cadence_ms", "base", "noise_sigma"}
        if unknown:
            raise ConfigError(f"unknown profile keys: {sorted(unknown)}")
        base = {"temp_c": 25.0, "ph": 7.0, "tds_ppm": 100.0, "turbidity_ntu": 1.0}
        base.update(data.get("base", {}))
        sigma = dict.fromkeys(PARAMS, 0.0)
        sigma.update(data.get("noise_sigma", {}))
        for mapping in (base, sigma):
            extra = set(mapping) - set(PARAMS)
            if extra:
                raise ConfigError(f"unknown profile parameters: {sorted(extra)}")
        return cls(device_id, data.get("cadence_ms", DEFAULT_CADENCE_MS), base, sigma, rng_seed)


# -- live synthesis ----------------------------------------------------------


def _to_counts(channel: str, volts: float, config: CalibrationConfig) -> int:
    if not (math.isfinite(volts) and 0.0 <= volts <= config.vref):
        raise InversionOutOfRange(f"{channel} needs {volts:.4f} V, outside [0, {config.vref}] V", channel=channel)
    # Round half up to the nearest count.
    return min(int(math.floor(volts / config.vref * config.adc_max + 0.5)), config.adc_max)


def physical_to_counts(
    temp_c: float, ph: float, tds_ppm: float, turbidity_ntu: float, config: CalibrationConfig = DEFAULT_CALIBRATION
) -> tuple[int, int, int, int]:
    """Invert the calibration curves: physical values -> ADC counts."""
    v_temp = temp_c / config.lm35_scale
    v_ph = (ph - config.ph_intercept) / config.ph_slope
    # The probe sees conductivity at the water temperature, not at 25 degC.
    ec = tds_ppm / config.k_e * (1.0 + config.alpha * (temp_c - 25.0))
    if config.ec_gain > 0:
        v_tds = ec / config.ec_gain
    else:
        v_tds = 0.0 if ec == 0 else math.inf
    v_turb = config.turb_v0 - turbidity_ntu / config.turb_slope
    return (
        _to_counts("temperature", v_temp, config),
        _to_counts("ph", v_ph, config),
        _to_counts("tds", v_tds, config),
        _to_counts("turbidity", v_turb, config),
    )


def synthesize_frame(
    profile: DeviceProfile, seq: int, uptime_ms: int, config: CalibrationConfig = DEFAULT_CALIBRATION
) -> SensorFrame:
    """One WQ1 frame; the noise depends only on (rng_seed, seq)."""
    rng = np.random.default_rng([profile.rng_seed, seq])
    noise = rng.standard_normal(len(PARAMS))
    values = [profile.base[p] + profile.noise_sigma.get(p, 0.0) * z for p, z in zip(PARAMS, noise)]
    return SensorFrame(FrameKind.RAW_ADC, profile.device_id, seq, uptime_ms, physical_to_counts(*values, config=config))


def live_frames(
    profile: DeviceProfile,
    config: CalibrationConfig = DEFAULT_CALIBRATION,
    clock: Callable[[], float] = time.monotonic,
) -> Iterator[SensorFrame]:
    """Endless WQ1 stream; uptime is read from *clock* when each frame is pulled."""
    start = clock()
    for seq in itertools.count():
        uptime_ms = int((clock() - start) * 1000)
        yield synthesize_frame(profile, seq & U32_MAX, uptime_ms, config)


# -- fixture replay ----------------------------------------------------------


@dataclass(frozen=True)
class FixtureRow:
    site: str
    take: int
    temp_c: Decimal
    ph: Decimal
    tds_ppm: Decimal
    turbidity_ntu: Decimal

    def values(self) -> tuple[Decimal, Decimal, Decimal, Decimal]:
        return (self.temp_c, self.ph, self.tds_ppm, self.turbidity_ntu)


def fixture_path(site: str) -> Path:
    """Path of the bundled fixture for ``Site-N``."""
    if site not in FIXTURE_SITES:
        raise KeyError(f"no bundled fixture for {site!r}; have {FIXTURE_SITES}")
    return Path(str(resources.files("aquasense") / "fixtures" / f"{site.lower()}.csv"))


def load_fixture(path: str | Path, site: str | None = None) -> list[FixtureRow]:
    """Read a fixture CSV; optionally keep only one site's rows (take order)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FixtureParseError(f"{path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header != FIXTURE_HEADER:
        raise FixtureParseError(f"header must be {','.join(FIXTURE_HEADER)}, got {header}", row=1)

    rows = []
    for line_no, cells in enumerate(reader, start=2):
        if not cells:
            continue
        rows.append(_parse_row(cells, line_no))
    if not rows:
        raise FixtureParseError(f"{path}: no data rows")
    if site is not None:
        rows = [r for r in rows if r.site == site]
        if not rows:
            raise FixtureParseError(f"{path}: no rows for site {site!r}")
    return sorted(rows, key=lambda r: (r.site, r.take))


def _parse_row(cells: list[str], line_no: int) -> FixtureRow:
    if len(cells) != len(FIXTURE_HEADER):
        raise FixtureParseError(f"expected {len(FIXTURE_HEADER)} columns, got {len(cells)}", row=line_no)
    site, take, *numbers = cells
    if not site:
        raise FixtureParseError("empty site", row=line_no)
    try:
        take_no = int(take)
        values = [Decimal(v) for v in numbers]
    except (ValueError, InvalidOperation):
        raise FixtureParseError(f"non-numeric value in {cells}", row=line_no) from None
    if take_no < 1:
        raise FixtureParseError(f"take must be positive, got {take_no}", row=line_no)
    temp, ph, tds, ntu = values
    if not all(v.is_finite() for v in values):
        raise FixtureParseError("values must be finite", row=line_no)
    if not (TEMP_RANGE_C[0] <= temp <= TEMP_RANGE_C[1] and PH_RANGE[0] <= ph <= PH_RANGE[1] and tds >= 0 and ntu >= 0):
        raise FixtureParseError(f"value out of range in {cells}", row=line_no)
    return FixtureRow(site, take_no, temp, ph, tds, ntu)


def fixed_point_channels(row: FixtureRow) -> tuple[int, int, int, int]:
    channels = []
    for value, scale in zip(row.values(), FIXED_POINT_SCALE):
        scaled = value * scale
        if scaled != scaled.to_integral_value():
            raise FixtureParseError(f"{value} has more precision than 1/{scale}", row=row.take)
        channels.append(int(scaled))
    return tuple(channels)


def replay_fixture(
    rows: Iterable[FixtureRow], device_id: str | None = None, cadence_ms: int = DEFAULT_CADENCE_MS
) -> Iterator[SensorFrame]:
    """WQ2 frames, one per row; seq starts at 0 per device id."""
    seqs: dict[str, int] = {}
    for row in rows:
        dev = device_id or row.site
        seq = seqs.get(dev, 0)
        seqs[dev] = seq + 1
        yield SensorFrame(FrameKind.FIXED_POINT, dev, seq, seq * cadence_ms, fixed_point_channels(row))


# -- transport ---------------------------------------------------------------


@dataclass
class DeviceRun:
    endpoint: str
    frames_sent: int = 0
    reconnects: int = 0
    send_times: list[float] = field(default_factory=list)


def backoff_delays(initial: float = BACKOFF_INITIAL_S, cap: float = BACKOFF_CAP_S) -> Iterator[float]:
    delay = initial
    while True:
        yield min(delay, cap)
        delay *= 2


async def _connect(host: str, port: int, retries: int, backoff: tuple[float, float], stop: asyncio.Event | None):
    delays = backoff_delays(*backoff)
    for attempt in itertools.count(1):
        try:
            return await asyncio.open_connection(host, port)
        except OSError as exc:
            if attempt > retries:
                raise ConnectionRefused(f"{host}:{port}", attempt) from exc
            delay = next(delays)
            log.warning("connect to %s:%s failed (%s); retrying in %.1fs", host, port, exc, delay)
            if await _sleep_or_stop(delay, stop):
                raise ConnectionRefused(f"{host}:{port}", attempt) from exc


async def _sleep_or_stop(delay: float, stop: asyncio.Event | None) -> bool:
    """Sleep *delay* seconds; return True early if *stop* gets set."""
    if stop is None:
        await asyncio.sleep(delay)
        return False
    try:
        await asyncio.wait_for(stop.wait(), timeout=max(delay, 0.0))
        return True
    except asyncio.TimeoutError:
        return False


async def run_device(
    frames: Iterable[SensorFrame],
    host: str,
    port: int,
    cadence_ms: int = DEFAULT_CADENCE_MS,
    *,
    retries: int = 5,
    duration_s: float | None = None,
    stop: asyncio.Event | None = None,
    backoff: tuple[float, float] = (BACKOFF_INITIAL_S, BACKOFF_CAP_S),
) -> DeviceRun:
    """Stream *frames* to ``host:port``, one every *cadence_ms*.

    Frames are scheduled on absolute ticks so the cadence does not drift.
    Stops when the frames run out, *duration_s* elapses, or *stop* is set.

    Raises:
        ConnectionRefused: once *retries* reconnect attempts have failed.
    """
    loop = asyncio.get_running_loop()
    run = DeviceRun(f"{host}:{port}")
    cadence = cadence_ms / 1000.0
    reader, writer = await _connect(host, port, retries, backoff, stop)
    source = iter(frames)
    start = t0 = loop.time()
    try:
        for k in itertools.count():
            tick = t0 + k * cadence
            if duration_s is not None and tick - start >= duration_s - 1e-6:
                break
            if stop is not None and stop.is_set():
                break
            if await _sleep_or_stop(tick - loop.time(), stop):
                break
            frame = next(source, None)
            if frame is None:
                break
            line = encode_frame(frame)
            while True:
                try:
                    if writer.is_closing() or reader.at_eof():
                        raise ConnectionResetError("gateway closed the connection")
                    writer.write(line)
                    await writer.drain()
                    break
                except OSError as exc:
                    log.warning("%s: connection lost (%s); reconnecting", run.endpoint, exc)
                    writer.close()
                    reader, writer = await _connect(host, port, retries, backoff, stop)
                    run.reconnects += 1
                    # Restart the schedule from now instead of bursting missed ticks.
                    t0 = loop.time() - k * cadence
            run.frames_sent += 1
            run.send_times.append(loop.time())
    finally:
        writer.close()
        try:
            await writer.wait_closed()
        except OSError:
            pass
    return run


async def run_fleet(
    sources: dict[str, Iterable[SensorFrame]],
    host: str,
    port: int,
    cadence_ms: int = DEFAULT_CADENCE_MS,
    **kwargs,
) -> dict[str, DeviceRun]:
    """Run one device per entry of *sources* concurrently."""
    names = list(sources)
    runs = await asyncio.gather(*(run_device(sources[n], host, port, cadence_ms, **kwargs) for n in names))
    return dict(zip(names, runs))
