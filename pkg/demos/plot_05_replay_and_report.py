"""
Replaying field data through a live gateway
===========================================

Start an in-process gateway on a free port, replay the bundled site
fixtures into it, then summarize the readings log by site.
"""

import asyncio
import tempfile
from pathlib import Path

from aquasense.config import GatewayConfig
from aquasense.gateway import Gateway
from aquasense.report import render, summarize
from aquasense.simulator import FIXTURE_SITES, fixture_path, load_fixture, replay_fixture, run_fleet

out = Path(tempfile.mkdtemp())
config = GatewayConfig(host="127.0.0.1", port=0, readings_path=out / "readings.jsonl", alerts_path=out / "alerts.jsonl")


async def main():
    gateway = Gateway(config)
    host, port = await gateway.start()
    sources = {site: replay_fixture(load_fixture(fixture_path(site))) for site in FIXTURE_SITES}
    await run_fleet(sources, host, port, cadence_ms=10)
    await asyncio.sleep(0.2)
    await gateway.close()
    return gateway.stats


stats = asyncio.run(main())
print(f"persisted {stats.persisted} readings, raised {stats.alerts} alerts")

# Means are rounded half-up to two decimals.
print(render(summarize(config.readings_path, "site"), "table"))
