"""Daily aggregation, column-to-surface conversion and date alignment."""

from __future__ import annotations

import csv
import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

from .data_ingest import HourlyGroundRecord, SatelliteDailyRecord, format_number
from .errors import (DuplicateKey, InvalidArgument, IoError, KindMismatch, MalformedRow,
                     MixedStations)

DEFAULT_MIN_COVERAGE = 0.75
NO2_MOLAR_MASS = 46.055  # g/mol
MIN_HEIGHT_KM, MAX_HEIGHT_KM = 8.0, 20.0


class SeriesKind(str, enum.Enum):
    GROUND = "ground_ugm3"
    SATELLITE = "satellite_molm2"
    SATELLITE_CONVERTED = "satellite_converted_ugm3"


UNITS = {
    SeriesKind.GROUND: "ug/m3",
    SeriesKind.SATELLITE: "mol/m2",
    # the column recipe is kept as stated; its unit algebra is not dimensionally clean
    SeriesKind.SATELLITE_CONVERTED: "ug/m3 (converted column)",
}


@dataclass(frozen=True)
class DailySeries:
    station_code: int
    kind: SeriesKind
    points: tuple[tuple[date, float], ...]
    smoothed: bool = False
    unit: str = field(default="")

    def __post_init__(self):
        object.__setattr__(self, "kind", SeriesKind(self.kind))
        object.__setattr__(self, "points", tuple((d, float(v)) for d, v in self.points))
        if not self.unit:
            object.__setattr__(self, "unit", UNITS[self.kind])
        prev = None
        for d, v in self.points:
            if prev is not None and d <= prev:
                raise ValueError(f"dates must be strictly increasing ({prev} then {d})")
            if not math.isfinite(v):
                raise ValueError(f"non-finite value on {d}")
            if v < 0 and not self.smoothed:
                raise ValueError(f"negative value on {d} in unsmoothed series")
            prev = d

    @property
    def dates(self) -> list[date]:
        return [d for d, _ in self.points]

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.points]

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ConversionSpec:
    """Parameters of the climatological column-to-surface conversion."""

    height_km: float = 13.0
    molar_mass_g_per_mol: float = NO2_MOLAR_MASS
    scale_factor: float = 1000.0

    def __post_init__(self):
        if not MIN_HEIGHT_KM <= self.height_km <= MAX_HEIGHT_KM:
            raise InvalidArgument(
                f"height_km={self.height_km} outside [{MIN_HEIGHT_KM}, {MAX_HEIGHT_KM}]")
        if not self.molar_mass_g_per_mol > 0 or not self.scale_factor > 0:
            raise InvalidArgument("molar mass and scale factor must be positive")


@dataclass(frozen=True)
class AlignedRow:
    date: date
    ground_ugm3: float
    satellite_molm2: float
    satellite_converted_ugm3: float


@dataclass(frozen=True)
class AlignedDailyTable:
    station_code: int
    rows: tuple[AlignedRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        for a, b in zip(self.rows, self.rows[1:]):
            if b.date <= a.date:
                raise ValueError("aligned rows must have strictly increasing dates")

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> list[float]:
        return [getattr(r, name) for r in self.rows]


def aggregate_daily(records: Sequence[HourlyGroundRecord],
                    min_coverage: float = DEFAULT_MIN_COVERAGE) -> DailySeries:
    """Daily arithmetic means of one station's hourly records.

    Records are assigned to the calendar date of their start hour, so the
    23:00-00:00 slot belongs to the earlier day. Days with fewer than
    ``min_coverage * 24`` hours are omitted.
    """
    if not 0.0 < min_coverage <= 1.0:
        raise InvalidArgument("min_coverage must lie in (0, 1]")
    if not records:
        raise InvalidArgument("no records to aggregate")
    stations = {r.station_code for r in records}
    if len(stations) > 1:
        raise MixedStations(stations)
    by_day: dict[date, dict[int, float]] = defaultdict(dict)
    for r in records:
        hours = by_day[r.start.date()]
        if r.start.hour in hours:
            raise DuplicateKey(r.station_code, r.start)
        hours[r.start.hour] = r.value
    points = []
    for day in sorted(by_day):
        values = list(by_day[day].values())
        if len(values) / 24.0 >= min_coverage:
            # fsum is correctly rounded, hence independent of record order; the
            # clamp keeps the last-ulp division error inside the day's range
            mean = math.fsum(values) / len(values)
            points.append((day, min(max(mean, min(values)), max(values))))
    return DailySeries(stations.pop(), SeriesKind.GROUND, tuple(points))


def group_by_station(records: Iterable) -> dict[int, list]:
    out: dict[int, list] = defaultdict(list)
    for r in records:
        out[r.station_code].append(r)
    return dict(sorted(out.items()))


def aggregate_stations(records: Iterable[HourlyGroundRecord],
                       min_coverage: float = DEFAULT_MIN_COVERAGE) -> dict[int, DailySeries]:
    return {s: aggregate_daily(rs, min_coverage) for s, rs in group_by_station(records).items()}


def satellite_series(records: Iterable[SatelliteDailyRecord]) -> dict[int, DailySeries]:
    out = {}
    for station, rs in group_by_station(records).items():
        pts = sorted((r.date, r.column_value) for r in rs)
        out[station] = DailySeries(station, SeriesKind.SATELLITE, tuple(pts))
    return out


def convert_column(column_value: float, spec: ConversionSpec) -> float:
    """Column (mol/m2) divided by the column height, times the scale factor and
    the molar mass: ``(v / h_km) * 1000 * 46.055`` with the defaults."""
    if not column_value >= 0:
        raise InvalidArgument(f"column value must be non-negative, got {column_value!r}")
    return column_value / spec.height_km * spec.scale_factor * spec.molar_mass_g_per_mol


def convert_series(series: DailySeries, spec: ConversionSpec) -> DailySeries:
    if series.kind is not SeriesKind.SATELLITE:
        raise KindMismatch(series.kind.value, SeriesKind.SATELLITE.value)
    if series.smoothed:
        # smoothing can leave small negatives; the conversion is linear so apply it directly
        pts = tuple((d, v / spec.height_km * spec.scale_factor * spec.molar_mass_g_per_mol)
                    for d, v in series.points)
    else:
        pts = tuple((d, convert_column(v, spec)) for d, v in series.points)
    return DailySeries(series.station_code, SeriesKind.SATELLITE_CONVERTED, pts,
                       smoothed=series.smoothed)


def align(ground: DailySeries, sat_raw: DailySeries, sat_conv: DailySeries) -> AlignedDailyTable:
    """Inner join of the three series on date."""
    stations = {ground.station_code, sat_raw.station_code, sat_conv.station_code}
    if len(stations) > 1:
        raise MixedStations(stations)
    for s, kind in ((ground, SeriesKind.GROUND), (sat_raw, SeriesKind.SATELLITE),
                    (sat_conv, SeriesKind.SATELLITE_CONVERTED)):
        if s.kind is not kind:
            raise KindMismatch(s.kind.value, kind.value)
    raw = dict(sat_raw.points)
    conv = dict(sat_conv.points)
    rows = [AlignedRow(d, g, raw[d], conv[d]) for d, g in ground.points if d in raw and d in conv]
    return AlignedDailyTable(ground.station_code, tuple(rows))


def reconvert(table: AlignedDailyTable, spec: ConversionSpec) -> AlignedDailyTable:
    """Recompute the converted column from the raw one for a new height."""
    rows = tuple(replace(r, satellite_converted_ugm3=convert_column(r.satellite_molm2, spec))
                 for r in table.rows)
    return AlignedDailyTable(table.station_code, rows)


def build_tables(ground: dict[int, DailySeries], satellite: dict[int, DailySeries],
                 spec: ConversionSpec, stations: Iterable[int] | None = None) -> list[AlignedDailyTable]:
    """Align every station present in both inputs (optionally restricted)."""
    wanted = set(ground) & set(satellite)
    if stations is not None:
        wanted &= set(stations)
    tables = []
    for station in sorted(wanted):
        sat = satellite[station]
        tables.append(align(ground[station], sat, convert_series(sat, spec)))
    return tables


DAILY_TABLE_HEADER = ("station_code", "date", "ground_ugm3", "sat_molm2", "sat_conv_ugm3")


def write_daily_tables(tables: Iterable[AlignedDailyTable], path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(DAILY_TABLE_HEADER)
            for t in tables:
                for r in t.rows:
                    w.writerow([t.station_code, r.date.isoformat(), format_number(r.ground_ugm3),
                                repr(r.satellite_molm2), repr(r.satellite_converted_ugm3)])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_daily_tables(path) -> list[AlignedDailyTable]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows or tuple(rows[0]) != DAILY_TABLE_HEADER:
        raise MalformedRow(1, f"daily table header must be {','.join(DAILY_TABLE_HEADER)}", path)
    by_station: dict[int, list[AlignedRow]] = defaultdict(list)
    for line_no, f in enumerate(rows[1:], start=2):
        if not f:
            continue
        if len(f) != 5:
            raise MalformedRow(line_no, f"expected 5 fields, got {len(f)}", path)
        try:
            by_station[int(f[0])].append(
                AlignedRow(date.fromisoformat(f[1]), float(f[2]), float(f[3]), float(f[4])))
        except ValueError as exc:
            raise MalformedRow(line_no, str(exc), path) from None
    try:
        return [AlignedDailyTable(s, tuple(rs)) for s, rs in sorted(by_station.items())]
    except ValueError as exc:
        raise MalformedRow(0, str(exc), path) from None
