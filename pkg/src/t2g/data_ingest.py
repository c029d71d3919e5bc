"""Readers for ARPAE hourly ground files, satellite daily exports and the
station registry.

Ground files use the agency's six-column layout::

    CO_STA,ID,DA_INIZ,DA_FIN,VAL,UM
    10000074,8,01/01/2019 02,01/01/2019 03,7,ug/m3

Timestamps are ``dd/mm/yyyy HH`` local civil time without zone information.
Values may use either ``.`` or ``,`` as decimal separator (the latter must be
quoted, since ``,`` is also the field delimiter).
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DuplicateKey, InvalidArgument, IoError, MalformedRow, NegativeValue, UnitMismatch

GROUND_HEADER = ("CO_STA", "ID", "DA_INIZ", "DA_FIN", "VAL", "UM")
SATELLITE_HEADER = ("station_code", "date", "no2_mol_m2")
REGISTRY_HEADER = ("station_code", "lat", "lon", "name")

GROUND_UNIT = "ug/m3"
TIMESTAMP_FORMAT = "%d/%m/%Y %H"
ONE_HOUR = timedelta(hours=1)


@dataclass(frozen=True)
class HourlyGroundRecord:
    station_code: int
    sensor_id: int
    start: datetime
    end: datetime
    value: float
    unit: str = GROUND_UNIT

    def __post_init__(self):
        if self.end - self.start != ONE_HOUR:
            raise ValueError(f"record must span one hour: {self.start} -> {self.end}")
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"invalid concentration {self.value!r}")


@dataclass(frozen=True)
class SatelliteDailyRecord:
    station_code: int
    date: date
    column_value: float

    def __post_init__(self):
        if not math.isfinite(self.column_value) or self.column_value < 0:
            raise ValueError(f"invalid column value {self.column_value!r}")


@dataclass(frozen=True)
class StationInfo:
    station_code: int
    latitude: float
    longitude: float
    name: str


@dataclass(frozen=True)
class StationRegistry:
    entries: tuple[StationInfo, ...]

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.station_code in seen:
                raise ValueError(f"duplicate station {e.station_code} in registry")
            seen.add(e.station_code)
            if not -90.0 <= e.latitude <= 90.0 or not -180.0 <= e.longitude <= 180.0:
                raise ValueError(f"station {e.station_code} has invalid coordinates")

    @property
    def codes(self) -> set[int]:
        return {e.station_code for e in self.entries}

    def __len__(self):
        return len(self.entries)


def parse_number(text: str) -> float:
    """Parse a decimal accepting a comma separator (``"7,5"`` -> 7.5)."""
    s = text.strip()
    if "," in s:
        if "." in s or s.count(",") > 1:
            raise ValueError(f"ambiguous number {text!r}")
        s = s.replace(",", ".")
    return float(s)


def format_number(value: float) -> str:
    """Shortest round-tripping text; integral values print without ``.0``."""
    s = repr(float(value))
    return s[:-2] if s.endswith(".0") else s


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text.strip(), TIMESTAMP_FORMAT)


def format_timestamp(ts: datetime) -> str:
    return ts.strftime(TIMESTAMP_FORMAT)


def _open_rows(path):
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8-sig") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise IoError(f"cannot decode {path}: {exc}") from exc


def _check_header(rows, expected, path):
    if not rows:
        raise MalformedRow(1, "missing header row", path)
    got = tuple(f.strip() for f in rows[0])
    if got != expected:
        raise MalformedRow(1, f"header {got} does not match {expected}", path)


def _parse_rows(rows, path, parse_one, collect_errors):
    out = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(not f.strip() for f in row):
            continue
        try:
            out.append(parse_one(line_no, [f.strip() for f in row]))
        except MalformedRow as exc:
            if collect_errors is None:
                raise
            collect_errors.append(exc)
    return out


def parse_ground_csv(path, expected_unit: str = GROUND_UNIT,
                     collect_errors: list | None = None) -> list[HourlyGroundRecord]:
    """Parse one ARPAE-format hourly file.

    Strict by default: the first bad row raises. When ``collect_errors`` is a
    list, bad rows are appended to it as exceptions and parsing continues, so
    ``data rows == len(records) + len(collect_errors)``.
    """
    path = Path(path)
    rows = _open_rows(path)
    _check_header(rows, GROUND_HEADER, path)

    def parse_one(line_no, f):
        if len(f) != 6:
            raise MalformedRow(line_no, f"expected 6 fields, got {len(f)}", path)
        try:
            station, sensor = int(f[0]), int(f[1])
            start, end = parse_timestamp(f[2]), parse_timestamp(f[3])
            value = parse_number(f[4])
        except ValueError as exc:
            raise MalformedRow(line_no, str(exc), path) from None
        unit = f[5].strip()
        if unit != expected_unit:
            raise UnitMismatch(line_no, unit, expected_unit, path)
        if not math.isfinite(value):
            raise MalformedRow(line_no, f"non-finite value {f[4]!r}", path)
        if value < 0:
            raise NegativeValue(line_no, value, path)
        if end - start != ONE_HOUR:
            raise MalformedRow(line_no, "DA_FIN must be DA_INIZ + 1 hour", path)
        return HourlyGroundRecord(station, sensor, start, end, value, unit)

    return _parse_rows(rows, path, parse_one, collect_errors)


def write_ground_csv(records: Iterable[HourlyGroundRecord], path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(GROUND_HEADER)
            for r in records:
                w.writerow([r.station_code, r.sensor_id, format_timestamp(r.start),
                            format_timestamp(r.end), format_number(r.value), r.unit])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def parse_ground_dir(directory, expected_unit: str = GROUND_UNIT,
                     collect_errors: list | None = None) -> list[HourlyGroundRecord]:
    """Parse every ``*.csv`` in ``directory`` (sorted by file name)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise IoError(f"not a directory: {directory}")
    records = []
    for p in sorted(directory.glob("*.csv")):
        records.extend(parse_ground_csv(p, expected_unit, collect_errors))
    return records


def parse_satellite_csv(path, collect_errors: list | None = None) -> list[SatelliteDailyRecord]:
    """Parse the per-station daily satellite export (``station_code,date,no2_mol_m2``)."""
    path = Path(path)
    rows = _open_rows(path)
    _check_header(rows, SATELLITE_HEADER, path)
    seen: dict[tuple[int, date], int] = {}

    def parse_one(line_no, f):
        if len(f) != 3:
            raise MalformedRow(line_no, f"expected 3 fields, got {len(f)}", path)
        try:
            station = int(f[0])
            day = date.fromisoformat(f[1])
            value = parse_number(f[2])
        except ValueError as exc:
            raise MalformedRow(line_no, str(exc), path) from None
        if not math.isfinite(value):
            raise MalformedRow(line_no, f"non-finite value {f[2]!r}", path)
        if value < 0:
            raise NegativeValue(line_no, value, path)
        return SatelliteDailyRecord(station, day, value)

    records = _parse_rows(rows, path, parse_one, collect_errors)
    # duplicates are a file-level defect: always fatal
    for r in records:
        key = (r.station_code, r.date)
        if key in seen:
            raise DuplicateKey(r.station_code, r.date)
        seen[key] = 1
    return records


def write_satellite_csv(records: Iterable[SatelliteDailyRecord], path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SATELLITE_HEADER)
            for r in records:
                w.writerow([r.station_code, r.date.isoformat(), repr(float(r.column_value))])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def parse_registry(path) -> StationRegistry:
    path = Path(path)
    rows = _open_rows(path)
    _check_header(rows, REGISTRY_HEADER, path)
    entries = []
    for line_no, f in enumerate(rows[1:], start=2):
        if not f:
            continue
        if len(f) != 4:
            raise MalformedRow(line_no, f"expected 4 fields, got {len(f)}", path)
        try:
            entries.append(StationInfo(int(f[0]), parse_number(f[1]), parse_number(f[2]),
                                       f[3].strip()))
        except ValueError as exc:
            raise MalformedRow(line_no, str(exc), path) from None
    try:
        return StationRegistry(tuple(entries))
    except ValueError as exc:
        raise MalformedRow(0, str(exc), path) from None


def write_registry(registry: StationRegistry, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGISTRY_HEADER)
        for e in registry.entries:
            w.writerow([e.station_code, repr(e.latitude), repr(e.longitude), e.name])


def _eligible_days(records, min_coverage) -> dict[int, set[date]]:
    """Per station, the calendar days that count as present.

    Ground days must reach ``min_coverage`` of 24 hours (the aggregation
    rule); a satellite day counts whenever it has a record.
    """
    days: dict[int, set[date]] = defaultdict(set)
    hours: dict[tuple[int, date], set[int]] = defaultdict(set)
    for r in records:
        if isinstance(r, HourlyGroundRecord):
            hours[r.station_code, r.start.date()].add(r.start.hour)
        else:
            days[r.station_code].add(r.date)
    for (station, day), hs in hours.items():
        if len(hs) / 24.0 >= min_coverage:
            days[station].add(day)
        else:
            days.setdefault(station, set())
    return days


def filter_stations(records: Sequence, registry: StationRegistry | None,
                    required_dates: tuple[date, date], min_completeness: float,
                    min_coverage: float = 0.75) -> tuple[list[int], list[int]]:
    """Split stations into (kept, dropped) by time-series completeness.

    A station is kept when the share of days in the inclusive
    ``required_dates`` range that are present is at least
    ``min_completeness``. With a registry, stations unknown to it, and
    registry stations without records, are dropped.
    """
    if not 0.0 < min_completeness <= 1.0:
        raise InvalidArgument("min_completeness must lie in (0, 1]")
    first, last = required_dates
    n_required = (last - first).days + 1
    if n_required <= 0:
        raise InvalidArgument("required_dates range is empty")
    days = _eligible_days(records, min_coverage)
    stations = set(days)
    if registry is not None:
        stations |= registry.codes
    kept, dropped = [], []
    for station in sorted(stations):
        present = sum(1 for d in days.get(station, ()) if first <= d <= last)
        ok = present / n_required >= min_completeness
        if registry is not None and station not in registry.codes:
            ok = False
        (kept if ok else dropped).append(station)
    return kept, dropped
