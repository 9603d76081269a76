"""CSV register logs: the 10-rows-per-instance format, polling, ingestion.

Native layout is ``date,time,register,value`` with ISO dates and tenth-of-a-
second times. Foreign CSV layouts (the published real recordings, say) are
read through a column-mapping config instead of guessing their headers.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import LogStructureError
from .registers import REG_COUNT

logger = logging.getLogger(__name__)

NATIVE_HEADER = ("date", "time", "register", "value")
DATE_FORMAT = "%Y-%m-%d"
TIME_FORMAT = "%H:%M:%S.%f"


@dataclass(frozen=True)
class LogRow:
    date: dt.date
    time: dt.time
    register: int
    value: int

    def format_time(self) -> str:
        # tenth-of-a-second resolution
        return f"{self.time.hour:02d}:{self.time.minute:02d}:{self.time.second:02d}.{self.time.microsecond // 100000}"


def row_timestamp(row: LogRow) -> dt.datetime:
    return dt.datetime.combine(row.date, row.time)


def make_rows(values: Sequence[int], when: dt.datetime) -> list[LogRow]:
    """The 10 per-instance rows, register_number 0..9 in order."""
    return [LogRow(date=when.date(), time=when.time(), register=i, value=int(v))
            for i, v in enumerate(values)]


class PollLogger:
    """Turns one poll result per tick into log rows, covering denial of service.

    A ``None`` poll result means the request timed out. In ``stale_repeat``
    mode the last known register values are re-emitted under the current
    timestamp (so the depth register's rate of change collapses to zero);
    in ``gap`` mode the instance is simply absent. A timeout before any
    value was ever seen logs zeros and a warning.
    """

    def __init__(self, base_dt: dt.datetime, poll_dt_s: float = 0.1,
                 dos_mode: str = "stale_repeat"):
        if dos_mode not in ("stale_repeat", "gap"):
            raise ValueError(f"unknown dos_mode {dos_mode!r}")
        self.base_dt = base_dt
        self.poll_dt_s = poll_dt_s
        self.dos_mode = dos_mode
        self._last_values: tuple[int, ...] | None = None

    def tick_time(self, tick: int) -> dt.datetime:
        # tick arithmetic in integer tenths; no float drift in timestamps
        tenths = round(self.poll_dt_s * 10)
        return self.base_dt + dt.timedelta(milliseconds=100 * tenths * tick)

    def tick(self, values: Sequence[int] | None, tick: int) -> list[LogRow]:
        when = self.tick_time(tick)
        if values is None:
            if self.dos_mode == "gap":
                return []
            if self._last_values is None:
                logger.warning("poll timed out with no prior snapshot; logging zeros at %s", when)
                return make_rows((0,) * REG_COUNT, when)
            return make_rows(self._last_values, when)
        self._last_values = tuple(int(v) for v in values)
        return make_rows(self._last_values, when)


@dataclass(frozen=True)
class ColumnMapping:
    """Where to find the four native columns in a foreign CSV."""

    date: str = "date"
    time: str = "time"
    register: str = "register"
    value: str = "value"
    delimiter: str = ","
    has_header: bool = True
    date_format: str = DATE_FORMAT
    time_format: str = TIME_FORMAT
    # optional per-file scenario labels for ingestion, filename -> slug
    scenario_by_file: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: str | Path) -> "ColumnMapping":
        data = json.loads(Path(path).read_text())
        columns = data.pop("columns", {})
        return cls(**columns, **data)


NATIVE_MAPPING = ColumnMapping()


def write_log(rows: Iterable[LogRow], path: str | Path) -> Path:
    """Write rows in the native layout; refuses broken 10-row groups."""
    path = Path(path)
    rows = list(rows)
    _check_groups(rows)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(NATIVE_HEADER)
        for row in rows:
            writer.writerow([row.date.isoformat(), row.format_time(), row.register, row.value])
    return path


def _check_groups(rows: list[LogRow], line_offset: int = 2) -> None:
    """Every timestamp must cover registers 0..9 exactly once, contiguously."""
    i = 0
    while i < len(rows):
        group = rows[i:i + REG_COUNT]
        stamp = (group[0].date, group[0].time)
        if len(group) < REG_COUNT or any((r.date, r.time) != stamp for r in group):
            raise LogStructureError(
                f"instance at {group[0].date} {group[0].format_time()} does not have "
                f"{REG_COUNT} rows", line_number=i + line_offset)
        registers = [r.register for r in group]
        if registers != list(range(REG_COUNT)):
            raise LogStructureError(
                f"instance at {group[0].date} {group[0].format_time()} covers registers "
                f"{registers} instead of 0..{REG_COUNT - 1}", line_number=i + line_offset)
        i += REG_COUNT


def _parse_time(text: str, fmt: str) -> dt.time:
    return dt.datetime.strptime(text, fmt).time()


def read_log(path: str | Path, mapping: ColumnMapping | None = None,
             validate: bool = True) -> list[LogRow]:
    """Parse a CSV log; with a mapping config any column layout can be ingested."""
    m = mapping or NATIVE_MAPPING
    path = Path(path)
    rows: list[LogRow] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=m.delimiter)
        header_index: dict[str, int] | None = None
        for line_no, record in enumerate(reader, start=1):
            if not record:
                continue
            if m.has_header and header_index is None:
                header_index = {name.strip(): i for i, name in enumerate(record)}
                for col in (m.date, m.time, m.register, m.value):
                    if col not in header_index:
                        raise LogStructureError(f"column {col!r} missing from header", line_no)
                continue
            if header_index is None:
                header_index = {m.date: 0, m.time: 1, m.register: 2, m.value: 3}
            try:
                rows.append(LogRow(
                    date=dt.datetime.strptime(record[header_index[m.date]], m.date_format).date(),
                    time=_parse_time(record[header_index[m.time]], m.time_format),
                    register=int(record[header_index[m.register]]),
                    value=int(record[header_index[m.value]]),
                ))
            except (ValueError, IndexError) as exc:
                raise LogStructureError(f"unparseable row: {exc}", line_no) from exc
    if validate:
        _check_groups(rows)
    return rows
