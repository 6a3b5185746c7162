import asyncio
import json
import random
from datetime import timedelta
from itertools import islice

import pytest

from aquasense.assessment import Thresholds, assess_reading
from aquasense.config import GatewayConfig, config_from_dict, load_config, parse_endpoint
from aquasense.errors import BindFailure, ConfigError, PersistenceFailure
from aquasense.frame import FrameKind, SensorFrame, encode_frame
from aquasense.gateway import Gateway
from aquasense.persistence import (
    ALERT_KEYS,
    READING_KEYS,
    JsonlAppender,
    emit_alerts,
    format_ts,
    parse_ts,
    persist_reading,
    reading_from_record,
)
from aquasense.simulator import DeviceProfile, live_frames, run_fleet
from conftest import T0, make_reading


def wq2(channels, device_id="dev01", seq=0):
    return encode_frame(SensorFrame(FrameKind.FIXED_POINT, device_id, seq, 0, channels))


@pytest.fixture
def gateway(tmp_path):
    config = GatewayConfig(host="127.0.0.1", port=0, readings_path=tmp_path / "r.jsonl", alerts_path=tmp_path / "a.jsonl")
    gw = Gateway(config, clock=lambda: T0)
    yield gw
    for out in (gw._readings, gw._alerts):
        if out is not None:
            out.close()


def lines(path):
    return [json.loads(x) for x in path.read_text().splitlines()] if path.exists() else []


def test_all_ideal_frame(gateway):
    gateway.process_line(wq2((2512, 7000, 5000, 500)))
    records = lines(gateway.config.readings_path)
    assert len(records) == 1
    rec = records[0]
    assert tuple(rec) == READING_KEYS
    assert rec["overall"] == "WithinLimits" and rec["violations"] == []
    assert (rec["temp_c"], rec["ph"], rec["tds_ppm"], rec["turbidity_ntu"]) == (25.12, 7.0, 50.0, 0.5)
    assert rec["ts"] == "2024-01-01T00:00:00.000Z"
    assert lines(gateway.config.alerts_path) == []
    assert gateway.stats.alerts == 0


def test_site2_take1_alerts(gateway):
    gateway.process_line(wq2((2688, 10570, 18736, 1330), device_id="Site-2"))
    alerts = lines(gateway.config.alerts_path)
    assert [a["parameter"] for a in alerts] == ["ph", "tds"]
    assert alerts[0] == {
        "ts": "2024-01-01T00:00:00.000Z", "device_id": "Site-2", "parameter": "ph",
        "value": 10.57, "threshold": 8.0, "status": "Alkaline",
    }  # fmt: skip
    assert tuple(alerts[1]) == ALERT_KEYS
    assert alerts[1]["value"] == 187.36 and alerts[1]["threshold"] == 170.0


def test_corrupted_checksum(gateway):
    line = bytearray(wq2((2512, 7000, 5000, 500)))
    line[-4] = ord("A") if line[-4] != ord("A") else ord("B")
    gateway.process_line(bytes(line))
    assert lines(gateway.config.readings_path) == []
    assert gateway.stats.parse_errors == 1
    assert gateway.stats.accepted == 0


def test_calibration_failure_stops_pipeline(gateway):
    raw = encode_frame(SensorFrame(FrameKind.RAW_ADC, "dev01", 0, 0, (0, 0, 0, 0)))
    assert gateway.process_line(raw) is None
    assert gateway.stats.accepted == 1 and gateway.stats.rejected == 1
    assert lines(gateway.config.readings_path) == [] and lines(gateway.config.alerts_path) == []
    assert "dev01" not in gateway.aggregates


def test_stale_sequence_dropped(gateway):
    gateway.process_line(wq2((2512, 7000, 5000, 500), seq=3))
    gateway.process_line(wq2((2512, 7000, 5000, 500), seq=3))
    gateway.process_line(wq2((2512, 7000, 5000, 500), seq=2))
    gateway.process_line(wq2((2512, 7000, 5000, 500), seq=4))
    assert gateway.stats.persisted == 2 and gateway.stats.stale == 2
    assert gateway.stats.accepted == gateway.stats.persisted + gateway.stats.rejected
    assert gateway.aggregates["dev01"].last_seq == 4


def test_alert_soundness_and_completeness(gateway):
    ticks = iter(range(10**6))
    gateway.clock = lambda: T0 + timedelta(milliseconds=next(ticks))  # distinct ts per reading
    rng = random.Random(7)
    for seq in range(200):
        channels = (rng.randint(1000, 4500), rng.randint(4000, 11000), rng.randint(0, 40000), rng.randint(0, 60000))
        gateway.process_line(wq2(channels, seq=seq))
    readings = lines(gateway.config.readings_path)
    alerts = lines(gateway.config.alerts_path)
    expected = {(r["ts"], r["device_id"], p) for r in readings for p in r["violations"]}
    got = {(a["ts"], a["device_id"], a["parameter"]) for a in alerts}
    assert len(readings) == 200
    assert len(alerts) == sum(len(r["violations"]) for r in readings)
    assert got == expected
    assert gateway.stats.alerts == len(alerts)


def test_persist_reading_appends_one_line(tmp_path):
    path = tmp_path / "r.jsonl"
    r = make_reading(28.93, 9.57, 349.75, 1.95)
    a = assess_reading(r)
    persist_reading(r, a, path)
    persist_reading(r, a, path)
    text = path.read_text()
    assert text.count("\n") == 2
    assert '"ph":9.57,' in text
    back = reading_from_record(json.loads(text.splitlines()[0]))
    assert back == r


def test_timestamps_round_trip():
    assert format_ts(T0.replace(microsecond=123456)) == "2024-01-01T00:00:00.123Z"
    assert parse_ts("2024-01-01T00:00:00.123Z") == T0.replace(microsecond=123000)


def test_torn_tail_is_repaired(tmp_path):
    path = tmp_path / "r.jsonl"
    r = make_reading()
    persist_reading(r, assess_reading(r), path)
    with open(path, "ab") as f:
        f.write(b'{"ts":"2024-01-01T00:0')  # process died mid-write
    persist_reading(r, assess_reading(r), path)
    records = lines(path)
    assert len(records) == 2


def test_persistence_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(PersistenceFailure) as info:
        JsonlAppender(blocker / "sub" / "r.jsonl")
    assert "sub" in str(info.value.path)


def test_emit_alerts_examples(tmp_path):
    th = Thresholds()
    site1 = make_reading(28.93, 9.57, 349.75, 1.95)
    assert [a.parameter for a in emit_alerts(site1, assess_reading(site1), th, tmp_path / "a.jsonl")] == ["ph", "tds"]
    ideal = make_reading(25.0, 7.0, 50.0, 0.5)
    assert emit_alerts(ideal, assess_reading(ideal), th, tmp_path / "a.jsonl") == []
    site4 = make_reading(37.46, 8.602, 176.284, 2.928)
    events = emit_alerts(site4, assess_reading(site4), th, tmp_path / "a.jsonl")
    assert [(e.parameter, e.threshold) for e in events] == [("temperature", 35.0), ("ph", 8.0), ("tds", 170.0)]
    assert len(lines(tmp_path / "a.jsonl")) == 5


def test_acidic_alert_uses_lower_threshold():
    r = make_reading(ph=4.0)
    (event,) = emit_alerts(r, assess_reading(r), Thresholds())
    assert (event.status, event.threshold) == ("Acidic", 6.0)


def test_load_test_100_devices(tmp_path):
    """1200 readings from 100 devices: every line persisted and parses back."""
    config = GatewayConfig(host="127.0.0.1", port=0, readings_path=tmp_path / "r.jsonl", alerts_path=tmp_path / "a.jsonl")

    async def main():
        gw = Gateway(config)
        host, port = await gw.start()
        sources = {}
        for i in range(100):
            sources[f"dev-{i:03d}"] = islice(live_frames(DeviceProfile(f"dev-{i:03d}", rng_seed=i)), 12)
        runs = await run_fleet(sources, host, port, cadence_ms=5)
        await asyncio.sleep(0.3)
        await gw.close()
        return runs, gw

    runs, gw = asyncio.run(main())
    assert sum(r.frames_sent for r in runs.values()) == 1200
    records = lines(config.readings_path)
    assert len(records) == 1200 == gw.stats.persisted
    assert gw.stats.rejected == 0 and gw.stats.parse_errors == 0
    assert {r["device_id"] for r in records} == set(runs)
    for rec in records:
        reading_from_record(rec)


def test_oversized_line_counted_once(tmp_path):
    config = GatewayConfig(host="127.0.0.1", port=0, readings_path=tmp_path / "r.jsonl", alerts_path=tmp_path / "a.jsonl")

    async def main():
        gw = Gateway(config)
        host, port = await gw.start()
        _, writer = await asyncio.open_connection(host, port)
        writer.write(b"$" + b"9" * 5000 + b"\n" + wq2((2512, 7000, 5000, 500)) + b"garbage\n")
        await writer.drain()
        writer.close()
        await asyncio.sleep(0.2)
        await gw.close()
        return gw

    gw = asyncio.run(main())
    assert gw.stats.parse_errors == 2
    assert gw.stats.persisted == 1


def test_max_connections(tmp_path):
    config = GatewayConfig(
        host="127.0.0.1", port=0, readings_path=tmp_path / "r.jsonl", alerts_path=tmp_path / "a.jsonl", max_connections=1
    )

    async def main():
        gw = Gateway(config)
        host, port = await gw.start()
        _, w1 = await asyncio.open_connection(host, port)
        await asyncio.sleep(0.05)
        r2, w2 = await asyncio.open_connection(host, port)
        eof = await asyncio.wait_for(r2.read(), 2)
        w1.close()
        w2.close()
        await gw.close()
        return gw, eof

    gw, eof = asyncio.run(main())
    assert eof == b""
    assert gw.stats.refused_connections == 1


def test_bind_failure(tmp_path):
    async def main():
        first = Gateway(GatewayConfig(host="127.0.0.1", port=0, readings_path=tmp_path / "r", alerts_path=tmp_path / "a"))
        host, port = await first.start()
        second = Gateway(GatewayConfig(host=host, port=port, readings_path=tmp_path / "r2", alerts_path=tmp_path / "a2"))
        try:
            with pytest.raises(BindFailure):
                await second.start()
        finally:
            await second.close()
            await first.close()

    asyncio.run(main())


def test_config_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({
        "gateway": {"listen": "127.0.0.1:9000", "readings_path": "x.jsonl", "max_connections": 4},
        "calibration": {"k_e": 0.7},
        "thresholds": {"temp_high_c": 30.0},
    }))  # fmt: skip
    config = load_config(path)
    assert (config.host, config.port, config.max_connections) == ("127.0.0.1", 9000, 4)
    assert config.calibration.k_e == 0.7 and config.thresholds.temp_high_c == 30.0
    assert str(config.readings_path) == "x.jsonl"


@pytest.mark.parametrize(
    "doc",
    [
        {"gateways": {}},
        {"gateway": {"port": 1}},
        {"thresholds": {"tds_alarm": 5}},
        {"calibration": {"k_e": 0.95}},
        {"gateway": {"max_connections": 0}},
        [],
    ],
)
def test_config_errors(doc):
    with pytest.raises(ConfigError):
        config_from_dict(doc)


def test_parse_endpoint():
    assert parse_endpoint("localhost:7070") == ("localhost", 7070)
    assert parse_endpoint("10.0.0.1") == ("10.0.0.1", 7070)
    assert parse_endpoint("[::1]:81") == ("::1", 81)
    with pytest.raises(ConfigError):
        parse_endpoint("host:abc")
