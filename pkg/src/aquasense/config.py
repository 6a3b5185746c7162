"""Gateway configuration file.

A single JSON document with three optional sections::

    {
      "gateway": {"listen": "0.0.0.0:7070", "readings_path": "readings.jsonl",
                  "alerts_path": "alerts.jsonl", "max_connections": 256},
      "calibration": {"k_e": 0.64, ...},
      "thresholds": {"temp_high_c": 35.0, ...}
    }

Unknown sections or keys are rejected so a misspelt threshold cannot pass
silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .assessment import DEFAULT_THRESHOLDS, Thresholds
from .calibration import DEFAULT_CALIBRATION, CalibrationConfig
from .errors import ConfigError

DEFAULT_PORT = 7070
SECTIONS = {"gateway", "calibration", "thresholds"}
GATEWAY_KEYS = {"listen", "readings_path", "alerts_path", "max_connections"}


def parse_endpoint(text: str, default_port: int = DEFAULT_PORT) -> tuple[str, int]:
    """Split ``host:port`` (IPv6 hosts in brackets); a bare host gets the default port."""
    text = text.strip()
    if text.startswith("["):
        host, _, rest = text[1:].partition("]")
        port = rest[1:] if rest.startswith(":") else ""
    elif text.count(":") == 1:
        host, port = text.split(":")
    else:
        host, port = text, ""
    try:
        port_no = int(port) if port else default_port
    except ValueError:
        raise ConfigError(f"bad port in endpoint {text!r}") from None
    if not 0 <= port_no <= 65535:
        raise ConfigError(f"port {port_no} out of range")
    return host or "127.0.0.1", port_no


@dataclass(frozen=True)
class GatewayConfig:
    host: str = "0.0.0.0"
    port: int = DEFAULT_PORT
    calibration: CalibrationConfig = field(default=DEFAULT_CALIBRATION)
    thresholds: Thresholds = field(default=DEFAULT_THRESHOLDS)
    readings_path: Path = Path("readings.jsonl")
    alerts_path: Path = Path("alerts.jsonl")
    max_connections: int = 256

    def __post_init__(self):
        if self.max_connections < 1:
            raise ConfigError(f"max_connections must be >= 1, got {self.max_connections}")

    @property
    def listen(self) -> str:
        return f"{self.host}:{self.port}"

    def with_overrides(self, **changes) -> GatewayConfig:
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def config_from_dict(data: dict) -> GatewayConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    gw = data.get("gateway", {})
    unknown = set(gw) - GATEWAY_KEYS
    if unknown:
        raise ConfigError(f"unknown gateway keys: {sorted(unknown)}")

    kwargs = {
        "calibration": CalibrationConfig.from_dict(data.get("calibration", {})),
        "thresholds": Thresholds.from_dict(data.get("thresholds", {})),
    }
    if "listen" in gw:
        kwargs["host"], kwargs["port"] = parse_endpoint(gw["listen"])
    for key in ("readings_path", "alerts_path"):
        if key in gw:
            kwargs[key] = Path(gw[key])
    if "max_connections" in gw:
        kwargs["max_connections"] = int(gw["max_connections"])
    try:
        return GatewayConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> GatewayConfig:
    if path is None:
        return GatewayConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(data)
