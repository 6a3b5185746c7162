"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime failure (bind, persistence,
connection).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import signal
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .assessment import assess_reading
from .calibration import Reading
from .config import DEFAULT_PORT, load_config, parse_endpoint
from .errors import AquaSenseError, ConfigError, ConnectionRefused, FixtureParseError, FrameError
from .frame import FrameKind, SensorFrame, encode_frame, parse_frame
from .gateway import run_gateway
from .persistence import alerts_for, reading_record
from .report import FORMATS, GROUPINGS, render, summarize
from .simulator import (
    DEFAULT_CADENCE_MS,
    FIXTURE_SITES,
    DeviceProfile,
    fixture_path,
    live_frames,
    load_fixture,
    replay_fixture,
    run_fleet,
)

log = logging.getLogger("aquasense")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

EPILOG = "exit codes: 0 success, 1 usage error, 2 runtime failure (bind/persistence/connection)"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="aquasense", description="Water-quality telemetry gateway and device simulator.", epilog=EPILOG)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gw = sub.add_parser("gateway", help="ingestion gateway", epilog=EPILOG).add_subparsers(dest="action", required=True)
    run = gw.add_parser("run", help="accept device connections and run the pipeline", epilog=EPILOG)
    run.add_argument("--listen", help=f"host:port (default 0.0.0.0:{DEFAULT_PORT})")
    run.add_argument("--config", type=Path, help="JSON config with gateway/calibration/thresholds sections")
    run.add_argument("--out", type=Path, help="readings JSONL path")
    run.add_argument("--alerts", type=Path, help="alerts JSONL path")
    run.add_argument("--max-connections", type=int)

    sim = sub.add_parser("sim", help="simulated devices", epilog=EPILOG).add_subparsers(dest="action", required=True)
    srun = sim.add_parser("run", help="stream synthetic WQ1 frames", epilog=EPILOG)
    srun.add_argument("--connect", default=f"127.0.0.1:{DEFAULT_PORT}")
    srun.add_argument("--devices", type=int, default=1)
    srun.add_argument("--cadence-ms", type=int, default=None, help=f"default {DEFAULT_CADENCE_MS}")
    srun.add_argument("--seed", type=int, default=0)
    srun.add_argument("--profile", type=Path, help="JSON profile: cadence_ms, base, noise_sigma")
    srun.add_argument("--duration-s", type=float, help="stop after this many seconds (default: run until interrupted)")
    srun.add_argument("--device-prefix", default="sim")
    srun.add_argument("--retries", type=int, default=5, help="reconnect attempts before giving up")

    rep = sim.add_parser("replay", help="replay fixture rows as WQ2 frames", epilog=EPILOG)
    rep.add_argument("--connect", default=f"127.0.0.1:{DEFAULT_PORT}")
    rep.add_argument(
        "--fixture",
        action="append",
        help=f"fixture CSV (repeatable); a bundled site name {', '.join(FIXTURE_SITES)} also works; "
        "default: all bundled fixtures",
    )
    rep.add_argument("--site")
    rep.add_argument("--device-id")
    rep.add_argument("--cadence-ms", type=int, default=DEFAULT_CADENCE_MS)
    rep.add_argument("--retries", type=int, default=5)

    rp = sub.add_parser("report", help="offline reports", epilog=EPILOG).add_subparsers(dest="action", required=True)
    summ = rp.add_parser("summarize", help="per-group count/mean/min/max", epilog=EPILOG)
    summ.add_argument("--in", dest="input", type=Path, required=True)
    summ.add_argument("--by", choices=GROUPINGS, default="device")
    summ.add_argument("--format", choices=FORMATS, default="table")

    cl = sub.add_parser("classify", help="assess one set of values", epilog=EPILOG)
    cl.add_argument("--temp", type=float, required=True)
    cl.add_argument("--ph", type=float, required=True)
    cl.add_argument("--tds", type=float, required=True)
    cl.add_argument("--turbidity", type=float, required=True)
    cl.add_argument("--config", type=Path)

    fr = sub.add_parser("frame", help="codec passthrough on stdin/stdout", epilog=EPILOG)
    fr.add_argument("action", choices=["encode", "decode"])
    return p


# -- handlers ----------------------------------------------------------------


def _gateway_run(args) -> int:
    config = load_config(args.config)
    host = port = None
    if args.listen:
        host, port = parse_endpoint(args.listen)
    config = config.with_overrides(
        host=host, port=port, readings_path=args.out, alerts_path=args.alerts, max_connections=args.max_connections
    )
    return run_gateway(config)


def _run_fleet(sources, endpoint, cadence_ms, retries, duration_s=None) -> int:
    host, port = parse_endpoint(endpoint)

    async def main():
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            try:
                loop.add_signal_handler(sig, stop.set)
            except (NotImplementedError, RuntimeError):
                pass
        return await run_fleet(sources, host, port, cadence_ms, retries=retries, duration_s=duration_s, stop=stop)

    try:
        runs = asyncio.run(main())
    except ConnectionRefused as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME
    summary = {
        "devices": len(runs),
        "frames_sent": sum(r.frames_sent for r in runs.values()),
        "reconnects": sum(r.reconnects for r in runs.values()),
        "per_device": {name: r.frames_sent for name, r in runs.items()},
    }
    print(json.dumps(summary))
    return EXIT_OK


def _sim_run(args) -> int:
    if args.devices < 1:
        raise ConfigError("--devices must be >= 1")
    data = json.loads(args.profile.read_text(encoding="utf-8")) if args.profile else {}
    sources, cadence = {}, None
    for i in range(args.devices):
        device_id = f"{args.device_prefix}-{i + 1:04d}"
        profile = DeviceProfile.from_dict(data, device_id, rng_seed=(args.seed + i) % 2**64)
        cadence = args.cadence_ms or profile.cadence_ms
        sources[device_id] = live_frames(profile)
    return _run_fleet(sources, args.connect, cadence, args.retries, args.duration_s)


def _resolve_fixture(name: str) -> Path:
    path = Path(name)
    if not path.exists() and name in FIXTURE_SITES:
        return fixture_path(name)
    return path


def _sim_replay(args) -> int:
    names = args.fixture or list(FIXTURE_SITES)
    rows = []
    for name in names:
        rows += load_fixture(_resolve_fixture(name))
    if args.site:
        rows = [r for r in rows if r.site == args.site]
        if not rows:
            raise FixtureParseError(f"no rows for site {args.site!r}")
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(args.device_id or row.site, []).append(row)
    sources = {dev: replay_fixture(group, dev, args.cadence_ms) for dev, group in groups.items()}
    return _run_fleet(sources, args.connect, args.cadence_ms, args.retries)


def _report(args) -> int:
    summary = summarize(args.input, args.by)
    sys.stdout.write(render(summary, args.format))
    if summary.skipped_lines:
        log.warning("%d corrupt line(s) skipped: %s", len(summary.skipped_lines), summary.skipped_lines)
    return EXIT_OK


def _classify(args) -> int:
    config = load_config(args.config)
    reading = Reading("cli", datetime.now(timezone.utc), 0, args.temp, args.ph, args.tds, args.turbidity).check()
    assessment = assess_reading(reading, config.thresholds)
    record = reading_record(reading, assessment)
    for key in ("ts", "device_id", "seq"):
        del record[key]
    record["alerts"] = [
        {k: v for k, v in a.record().items() if k not in ("ts", "device_id")}
        for a in alerts_for(reading, assessment, config.thresholds)
    ]
    print(json.dumps(record, indent=2))
    return EXIT_OK


def _frame(args) -> int:
    failures = 0
    if args.action == "encode":
        for line_no, line in enumerate(sys.stdin, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                frame = SensorFrame(
                    FrameKind(obj["kind"]), obj["device_id"], obj["seq"], obj["uptime_ms"], tuple(obj["channels"])
                )
                sys.stdout.write(encode_frame(frame).decode("ascii"))
            except (ValueError, KeyError, TypeError, FrameError) as exc:
                failures += 1
                print(f"line {line_no}: {type(exc).__name__}: {exc}", file=sys.stderr)
    else:
        for line_no, line in enumerate(sys.stdin.buffer, start=1):
            if not line.strip():
                continue
            try:
                f = parse_frame(line)
            except FrameError as exc:
                failures += 1
                print(f"line {line_no}: {type(exc).__name__}: {exc}", file=sys.stderr)
                continue
            doc = {"kind": f.kind.value, "device_id": f.device_id, "seq": f.seq, "uptime_ms": f.uptime_ms}
            doc["channels"] = list(f.channels)
            print(json.dumps(doc))
    return EXIT_RUNTIME if failures else EXIT_OK


HANDLERS = {
    ("gateway", "run"): _gateway_run,
    ("sim", "run"): _sim_run,
    ("sim", "replay"): _sim_replay,
    ("report", "summarize"): _report,
    ("classify", None): _classify,
    ("frame", "encode"): _frame,
    ("frame", "decode"): _frame,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    handler = HANDLERS[(args.command, getattr(args, "action", None))]
    try:
        return handler(args)
    except (ConfigError, FixtureParseError) as exc:
        print(f"aquasense: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AquaSenseError, OSError) as exc:
        print(f"aquasense: error: {exc}", file=sys.stderr)
        # Bad values handed to classify are a usage problem, not a runtime one.
        return EXIT_USAGE if args.command == "classify" else EXIT_RUNTIME
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
