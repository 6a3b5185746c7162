import re
import signal
import subprocess
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import pytest

from aquasense.calibration import Reading

sys.path.insert(0, str(Path(__file__).parent))

T0 = datetime(2024, 1, 1, tzinfo=timezone.utc)


def make_reading(temp=25.0, ph=7.0, tds=50.0, ntu=0.5, device_id="dev01", seq=0, ts=T0):
    return Reading(device_id, ts, seq, temp, ph, tds, ntu)


def cli(*args, **kwargs):
    """Run the CLI in a subprocess."""
    return subprocess.run(
        [sys.executable, "-m", "aquasense", *args], capture_output=True, text=True, timeout=120, **kwargs
    )


class GatewayProcess:
    """A `gateway run` subprocess on an ephemeral loopback port."""

    def __init__(self, tmp_path: Path, *extra: str):
        self.readings = tmp_path / "readings.jsonl"
        self.alerts = tmp_path / "alerts.jsonl"
        self.log_path = tmp_path / "gateway.log"
        self._log = open(self.log_path, "w")
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "aquasense", "gateway", "run", "--listen", "127.0.0.1:0",
             "--out", str(self.readings), "--alerts", str(self.alerts), *extra],
            stdout=subprocess.DEVNULL, stderr=self._log,
        )  # fmt: skip
        self.endpoint = self._wait_ready()

    def _wait_ready(self, timeout=15.0) -> str:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            m = re.search(r"listening on ([\d.]+):(\d+)", self.log_path.read_text())
            if m:
                return f"{m.group(1)}:{m.group(2)}"
            if self.proc.poll() is not None:
                raise RuntimeError(f"gateway exited early:\n{self.log_path.read_text()}")
            time.sleep(0.05)
        raise RuntimeError("gateway did not start")

    def stop(self) -> int:
        if self.proc.poll() is None:
            self.proc.send_signal(signal.SIGINT)
        rc = self.proc.wait(timeout=15)
        self._log.close()
        return rc

    def log(self) -> str:
        return self.log_path.read_text()


@pytest.fixture
def gateway_proc(tmp_path):
    gw = GatewayProcess(tmp_path)
    yield gw
    if gw.proc.poll() is None:
        gw.proc.kill()
        gw.proc.wait()

