"""TCP ingestion gateway.

Every newline-delimited frame runs through the same sequential pipeline:
parse -> calibrate -> assess -> aggregate (sequence check) -> persist -> alert.
A frame that fails a stage produces nothing downstream.  All pipeline work
happens on the event loop thread, which gives each per-device aggregate and
each log file a single serialized writer.
"""

from __future__ import annotations

import asyncio
import logging
import signal
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable

from .aggregation import SiteAggregate
from .assessment import assess_reading
from .calibration import Reading, calibrate_reading
from .config import GatewayConfig
from .errors import AquaSenseError, BindFailure, FrameError, PersistenceFailure, StaleSequence
from .frame import MAX_LINE_BYTES, parse_frame
from .persistence import JsonlAppender, emit_alerts, persist_reading

log = logging.getLogger(__name__)


@dataclass
class GatewayStats:
    lines: int = 0
    parse_errors: int = 0
    accepted: int = 0
    rejected: int = 0
    stale: int = 0
    persisted: int = 0
    alerts: int = 0
    connections: int = 0
    refused_connections: int = 0


class Gateway:
    def __init__(self, config: GatewayConfig, clock: Callable[[], datetime] | None = None):
        self.config = config
        self.clock = clock or (lambda: datetime.now(timezone.utc))
        self.stats = GatewayStats()
        self.aggregates: dict[str, SiteAggregate] = {}
        self.fatal: BaseException | None = None
        self.stopped = asyncio.Event()
        self._readings: JsonlAppender | None = None
        self._alerts: JsonlAppender | None = None
        self._server: asyncio.base_events.Server | None = None
        self._handlers: set[asyncio.Task] = set()
        self._active = 0

    # -- pipeline ----------------------------------------------------------

    def open_logs(self) -> None:
        if self._readings is None:
            self._readings = JsonlAppender(self.config.readings_path)
            self._alerts = JsonlAppender(self.config.alerts_path)

    def process_line(self, line: bytes) -> Reading | None:
        """Run one line through the pipeline; returns the persisted Reading, if any."""
        if not line.strip():
            return None
        self.open_logs()
        self.stats.lines += 1
        try:
            frame = parse_frame(line)
        except FrameError as exc:
            self.stats.parse_errors += 1
            log.warning("dropping frame: %s: %s", type(exc).__name__, exc)
            return None
        self.stats.accepted += 1

        try:
            reading = calibrate_reading(frame, self.config.calibration, self.clock())
            assessment = assess_reading(reading, self.config.thresholds)
            agg = self.aggregates.get(reading.device_id)
            if agg is None:
                agg = self.aggregates[reading.device_id] = SiteAggregate(reading.device_id)
            agg.push(reading)
        except StaleSequence as exc:
            self.stats.rejected += 1
            self.stats.stale += 1
            log.warning("dropping frame: %s", exc)
            return None
        except AquaSenseError as exc:
            self.stats.rejected += 1
            log.warning("rejecting frame from %s seq %s: %s", frame.device_id, frame.seq, exc)
            return None

        persist_reading(reading, assessment, self._readings)
        self.stats.persisted += 1
        self.stats.alerts += len(emit_alerts(reading, assessment, self.config.thresholds, self._alerts))
        return reading

    # -- network -----------------------------------------------------------

    async def start(self) -> tuple[str, int]:
        self.open_logs()
        try:
            self._server = await asyncio.start_server(self._on_connect, self.config.host, self.config.port)
        except OSError as exc:
            raise BindFailure(f"cannot listen on {self.config.listen}: {exc}") from exc
        host, port = self._server.sockets[0].getsockname()[:2]
        log.info("gateway listening on %s:%d", host, port)
        return host, port

    async def _on_connect(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        peer = writer.get_extra_info("peername")
        if self._active >= self.config.max_connections:
            self.stats.refused_connections += 1
            log.warning("refusing %s: %d connections open", peer, self._active)
            writer.close()
            return
        task = asyncio.current_task()
        self._handlers.add(task)
        self._active += 1
        self.stats.connections += 1
        try:
            await self._read_lines(reader)
        except PersistenceFailure as exc:
            self.fatal = exc
            log.error("persistence failure: %s", exc)
            self.stopped.set()
        except (ConnectionError, asyncio.CancelledError):
            pass
        finally:
            self._active -= 1
            self._handlers.discard(task)
            writer.close()

    async def _read_lines(self, reader: asyncio.StreamReader) -> None:
        buf = b""
        discarding = False
        while True:
            chunk = await reader.read(4096)
            if not chunk:
                break
            buf += chunk
            while (nl := buf.find(b"\n")) >= 0:
                line, buf = buf[: nl + 1], buf[nl + 1 :]
                if discarding:
                    discarding = False
                    continue
                self.process_line(line)
            if len(buf) > MAX_LINE_BYTES and not discarding:
                # Report once, then skip the rest of the oversized line.
                self.process_line(buf)
                buf = b""
                discarding = True
            elif discarding:
                buf = b""
        if buf and not discarding:
            self.process_line(buf)

    async def close(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        for task in list(self._handlers):
            task.cancel()
        if self._handlers:
            await asyncio.gather(*self._handlers, return_exceptions=True)
        for out in (self._readings, self._alerts):
            if out is not None:
                out.close()
        self._readings = self._alerts = None


async def serve(config: GatewayConfig, ready: Callable[[str, int], None] | None = None) -> int:
    gateway = Gateway(config)
    try:
        host, port = await gateway.start()
    except (BindFailure, PersistenceFailure) as exc:
        log.error("%s", exc)
        return 2
    if ready is not None:
        ready(host, port)
    loop = asyncio.get_running_loop()
    for sig in (signal.SIGINT, signal.SIGTERM):
        try:
            loop.add_signal_handler(sig, gateway.stopped.set)
        except (NotImplementedError, RuntimeError):
            pass
    await gateway.stopped.wait()
    await gateway.close()
    s = gateway.stats
    log.info(
        "gateway stopped: %d lines, %d parse errors, %d accepted, %d persisted, %d rejected, %d alerts",
        s.lines, s.parse_errors, s.accepted, s.persisted, s.rejected, s.alerts,
    )  # fmt: skip
    return 2 if gateway.fatal else 0


def run_gateway(config: GatewayConfig) -> int:
    """Run until SIGINT/SIGTERM; returns the process exit status."""
    return asyncio.run(serve(config))
