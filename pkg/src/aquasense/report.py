"""Offline summaries of a readings log."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .aggregation import FIELDS, WindowStats, group_stats, round_half_up, site_of
from .calibration import Reading
from .errors import CorruptLog
from .persistence import reading_from_record

log = logging.getLogger(__name__)

GROUPINGS = ("device", "site")
FORMATS = ("table", "csv", "json")


@dataclass
class Summary:
    group_by: str
    groups: dict[str, WindowStats] = field(default_factory=dict)
    skipped_lines: list[int] = field(default_factory=list)

    def means(self, places: int = 2) -> dict[str, dict[str, str]]:
        """Display means per group, rounded half-up."""
        return {g: {f: str(round_half_up(s.mean[f], places)) for f in FIELDS} for g, s in self.groups.items()}


def load_readings(path: str | Path, *, strict: bool = False) -> tuple[list[Reading], list[int]]:
    """Parse a readings JSONL file.

    Bad lines are skipped and their 1-based line numbers returned; with
    ``strict=True`` the first one raises CorruptLog instead.
    """
    path = Path(path)
    readings, skipped = [], []
    with open(path, encoding="utf-8", errors="replace") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                readings.append(reading_from_record(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                err = CorruptLog(path, line_no, str(exc))
                if strict:
                    raise err from exc
                log.warning("skipping %s", err)
                skipped.append(line_no)
    return readings, skipped


def summarize(path: str | Path, group_by: str = "device", *, strict: bool = False) -> Summary:
    if group_by not in GROUPINGS:
        raise ValueError(f"group_by must be one of {GROUPINGS}")
    readings, skipped = load_readings(path, strict=strict)
    key = (lambda r: r.device_id) if group_by == "device" else (lambda r: site_of(r.device_id))
    return Summary(group_by, group_stats(readings, key), skipped)


def _columns() -> list[str]:
    return [f"{f}_{stat}" for f in FIELDS for stat in ("mean", "min", "max")]


def _rows(summary: Summary) -> list[list[str]]:
    rows = []
    for group, stats in summary.groups.items():
        row = [group, str(stats.count)]
        for f in FIELDS:
            row += [str(round_half_up(getattr(stats, stat)[f])) for stat in ("mean", "min", "max")]
        rows.append(row)
    return rows


def render(summary: Summary, fmt: str = "table") -> str:
    header = [summary.group_by, "count"] + _columns()
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(_rows(summary))
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "group_by": summary.group_by,
            "skipped_lines": len(summary.skipped_lines),
            "groups": [
                {
                    "id": group,
                    "count": stats.count,
                    **{
                        f: {stat: float(round_half_up(getattr(stats, stat)[f])) for stat in ("mean", "min", "max")}
                        for f in FIELDS
                    },
                }
                for group, stats in summary.groups.items()
            ],
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt != "table":
        raise ValueError(f"format must be one of {FORMATS}")

    table = [header] + _rows(summary)
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    lines = ["  ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(r, widths))) for r in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    if summary.skipped_lines:
        lines.append(f"({len(summary.skipped_lines)} unparseable line(s) skipped)")
    return "\n".join(lines) + "\n"
