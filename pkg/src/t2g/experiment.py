"""Evaluation protocol: shuffle, 80/20 split, training, per-station RMSE and
grid sweeps over tree depth and column height."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

from . import data_ingest, preprocess
from .config import ExperimentConfig, SplitSpec
from .errors import (DatasetTooSmall, EmptyGrid, EmptyVectors, InvalidArgument, IoError,
                     LengthMismatch, T2GError)
from .model import (AlignedDataset, GbdtModel, fit_dataset)
from .preprocess import AlignedDailyTable, DailySeries, SeriesKind
from .rng import XorShift64Star
from .smoothing import SgFilterSpec, sg_filter_series

log = logging.getLogger(__name__)

__all__ = ["SplitSpec", "SweepGrid", "EvalReport", "rmse", "shuffle_split", "build_dataset",
           "load_tables", "evaluate_tables", "run_experiment", "run_sweep"]


def rmse(predicted, actual) -> float:
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape:
        raise LengthMismatch(f"lengths differ: {p.shape} vs {a.shape}")
    if p.size == 0:
        raise EmptyVectors("rmse of empty vectors")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(a))):
        raise InvalidArgument("rmse inputs must be finite")
    return float(np.sqrt(np.mean((p - a) ** 2)))


def shuffle_split(dataset: AlignedDataset, spec: SplitSpec) -> tuple[AlignedDataset, AlignedDataset]:
    """Permute samples with the seeded xorshift64* generator, then put the first
    ``floor(train_fraction * n)`` in train and the rest in test."""
    n = len(dataset)
    if n < 2:
        raise DatasetTooSmall(f"need at least 2 samples to split, got {n}")
    perm = XorShift64Star(spec.seed).permutation(n)
    n_train = math.floor(spec.train_fraction * n)
    if n_train == 0 or n_train == n:
        raise DatasetTooSmall(f"split of {n} samples at {spec.train_fraction} leaves an empty side")
    return dataset.subset(perm[:n_train]), dataset.subset(perm[n_train:])


# -- pipeline ------------------------------------------------------------------

@dataclass(frozen=True)
class IngestResult:
    tables: tuple[AlignedDailyTable, ...]
    kept: tuple[int, ...]
    dropped: tuple[int, ...]


def load_tables(ground_dir, satellite_file, config: ExperimentConfig, registry=None,
                collect_errors: list | None = None) -> IngestResult:
    """Ingest, screen stations for completeness, aggregate and align."""
    ground = data_ingest.parse_ground_dir(ground_dir, collect_errors=collect_errors)
    satellite = data_ingest.parse_satellite_csv(satellite_file, collect_errors=collect_errors)
    agg = config.aggregation
    if ground:
        days = [r.start.date() for r in ground]
        required = (agg.start_date or min(days), agg.end_date or max(days))
        kept, dropped = data_ingest.filter_stations(ground, registry, required,
                                                    agg.min_completeness, agg.min_coverage)
    else:
        kept, dropped = [], []
    if not kept:
        raise T2GError("no station survives the completeness filter")
    keep = set(kept)
    daily = preprocess.aggregate_stations((r for r in ground if r.station_code in keep),
                                          agg.min_coverage)
    if agg.start_date or agg.end_date:
        lo, hi = agg.start_date or date.min, agg.end_date or date.max
        daily = {s: DailySeries(s, SeriesKind.GROUND, tuple(p for p in ser.points if lo <= p[0] <= hi))
                 for s, ser in daily.items()}
    tables = preprocess.build_tables(daily, preprocess.satellite_series(satellite),
                                     config.conversion, keep)
    return IngestResult(tuple(tables), tuple(kept), tuple(dropped))


def smooth_table(table: AlignedDailyTable, conversion, sg: SgFilterSpec):
    """Recompute the converted column for ``conversion`` and smooth all three
    columns. Returns (ground, raw, converted) smoothed series."""
    table = preprocess.reconvert(table, conversion)
    dates = [r.date for r in table.rows]
    out = []
    for kind, col in ((SeriesKind.GROUND, "ground_ugm3"), (SeriesKind.SATELLITE, "satellite_molm2"),
                      (SeriesKind.SATELLITE_CONVERTED, "satellite_converted_ugm3")):
        series = DailySeries(table.station_code, kind, tuple(zip(dates, table.column(col))))
        out.append(sg_filter_series(series, sg))
    return tuple(out)


def build_dataset(tables: Sequence[AlignedDailyTable], conversion, sg: SgFilterSpec) -> AlignedDataset:
    """Pool all stations into one sample set, ordered by station then date."""
    feats, target, stations, dates = [], [], [], []
    for table in tables:
        if len(table) == 0:
            continue
        ground, raw, conv = smooth_table(table, conversion, sg)
        for (d, g), (_, r), (_, c) in zip(ground.points, raw.points, conv.points):
            feats.append((r, c, float(table.station_code)))
            target.append(g)
            stations.append(table.station_code)
            dates.append(d)
    return AlignedDataset(np.asarray(feats, dtype=float).reshape(-1, 3), np.asarray(target),
                          tuple(stations), tuple(dates))


# -- evaluation ----------------------------------------------------------------

@dataclass(frozen=True)
class StationScore:
    rmse_normalized: float
    rmse_ugm3: float
    n_test: int


@dataclass(frozen=True)
class EvalReport:
    per_station: dict[int, StationScore]
    averaged_rmse_normalized: float
    averaged_rmse_ugm3: float
    excluded: tuple[int, ...]
    series: dict[int, tuple[tuple[date, float, float], ...]]

    @property
    def stations(self) -> list[int]:
        return sorted(self.per_station)


def evaluate_model(model: GbdtModel, test: AlignedDataset, stations: Sequence[int],
                   weighted: bool = False) -> EvalReport:
    """Per-station RMSE on the test samples, in normalized space and in ug/m3."""
    pred = model.predict(test.features) if len(test) else np.empty(0)
    truth = test.target
    pred_n, truth_n = model.normalize_target(pred), model.normalize_target(truth)
    by_station: dict[int, list[int]] = {}
    for i, s in enumerate(test.stations):
        by_station.setdefault(s, []).append(i)
    per_station, series, excluded = {}, {}, []
    for s in sorted(set(stations) | set(by_station)):
        idx = by_station.get(s)
        if not idx:
            log.info("station %s has no test samples", s)
            excluded.append(s)
            continue
        idx = sorted(idx, key=lambda i: test.dates[i])
        per_station[s] = StationScore(rmse(pred_n[idx], truth_n[idx]), rmse(pred[idx], truth[idx]),
                                      len(idx))
        series[s] = tuple((test.dates[i], float(truth[i]), float(pred[i])) for i in idx)
    if not per_station:
        raise T2GError("no station has test samples")
    scores = [per_station[s] for s in sorted(per_station)]
    w = np.array([sc.n_test for sc in scores], dtype=float) if weighted else np.ones(len(scores))
    avg_n = float(np.dot(w, [sc.rmse_normalized for sc in scores]) / w.sum())
    avg_u = float(np.dot(w, [sc.rmse_ugm3 for sc in scores]) / w.sum())
    return EvalReport(per_station, avg_n, avg_u, tuple(excluded), series)


def pipeline_metadata(config: ExperimentConfig) -> dict:
    return {k: (v.isoformat() if isinstance(v, date) else v) for k, v in config.flat().items()}


def config_from_metadata(meta: dict) -> ExperimentConfig:
    return ExperimentConfig().with_overrides(meta)


def train_tables(tables: Sequence[AlignedDailyTable], config: ExperimentConfig):
    """Build the pooled dataset, split it and fit. Returns (model, train, test)."""
    dataset = build_dataset(tables, config.conversion, config.sg)
    train, test = shuffle_split(dataset, config.split)
    model = fit_dataset(train, config.model_params(), metadata=pipeline_metadata(config))
    return model, train, test


def evaluate_tables(tables: Sequence[AlignedDailyTable], config: ExperimentConfig):
    model, train, test = train_tables(tables, config)
    stations = [t.station_code for t in tables if len(t)]
    return model, evaluate_model(model, test, stations, config.split.weighted_average)


def run_experiment(ground_dir, satellite_file, config: ExperimentConfig | None = None) -> EvalReport:
    config = config or ExperimentConfig()
    ingest = load_tables(ground_dir, satellite_file, config)
    return evaluate_tables(ingest.tables, config)[1]


# -- sweeps --------------------------------------------------------------------

@dataclass(frozen=True)
class SweepGrid:
    max_depths: tuple[int, ...] = (3, 6, 12)
    heights_km: tuple[float, ...] = (13.0,)

    def __post_init__(self):
        object.__setattr__(self, "max_depths", tuple(int(d) for d in self.max_depths))
        object.__setattr__(self, "heights_km", tuple(float(h) for h in self.heights_km))
        if not self.max_depths or not self.heights_km:
            raise EmptyGrid("sweep grid needs at least one depth and one height")
        for d in self.max_depths:
            if not 1 <= d <= 16:
                raise InvalidArgument(f"grid depth {d} outside [1, 16]")
        for h in self.heights_km:
            if not 8.0 <= h <= 20.0:
                raise InvalidArgument(f"grid height {h} outside [8, 20] km")

    def cells(self) -> list[tuple[int, float]]:
        return [(d, h) for d in self.max_depths for h in self.heights_km]


@dataclass(frozen=True)
class SweepRow:
    max_depth: int
    height_km: float
    report: EvalReport | None
    error: str | None = None


def _run_cell(args) -> SweepRow:
    tables, config, depth, height = args
    try:
        cfg = replace(config, model=replace(config.model, max_depth=depth),
                      conversion=replace(config.conversion, height_km=height))
        return SweepRow(depth, height, evaluate_tables(tables, cfg)[1])
    except T2GError as exc:
        return SweepRow(depth, height, None, f"{type(exc).__name__}: {exc}")


def run_sweep(grid: SweepGrid, tables: Sequence[AlignedDailyTable], config: ExperimentConfig,
              jobs: int = 1) -> list[SweepRow]:
    """Evaluate every (depth, height) cell with the same split seed.

    Rows come back in grid order (depth-major) whatever the completion order.
    """
    work = [(tuple(tables), config, d, h) for d, h in grid.cells()]
    if jobs <= 1 or len(work) == 1:
        return [_run_cell(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, work))


# -- report files --------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    try:
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_report(report: EvalReport, out_dir) -> list[Path]:
    """Write ``stations.csv``, ``summary.csv``, ``series.csv`` and ``excluded.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "stations.csv", out / "summary.csv", out / "series.csv", out / "excluded.csv"]
    _write_csv(paths[0], ("station_code", "rmse_norm", "rmse_ugm3", "n_test"),
               [(s, _fmt(sc.rmse_normalized), _fmt(sc.rmse_ugm3), sc.n_test)
                for s, sc in sorted(report.per_station.items())])
    _write_csv(paths[1], ("metric", "value"),
               [("avg_rmse_norm", _fmt(report.averaged_rmse_normalized)),
                ("avg_rmse_ugm3", _fmt(report.averaged_rmse_ugm3)),
                ("n_stations", len(report.per_station)),
                ("n_excluded", len(report.excluded))])
    _write_csv(paths[2], ("station_code", "date", "ground_truth", "prediction"),
               [(s, d.isoformat(), _fmt(g), _fmt(p))
                for s in sorted(report.series) for d, g, p in report.series[s]])
    _write_csv(paths[3], ("station_code", "reason"),
               [(s, "no test samples") for s in report.excluded])
    return paths


SWEEP_HEADER = ("max_depth", "height_km", "avg_rmse_norm", "avg_rmse_ugm3")


def write_sweep(rows: Sequence[SweepRow], path) -> Path:
    """Summary table mirroring the depth/height tables; failed cells go to a
    sibling ``*_errors.csv``."""
    path = Path(path)
    ok = [r for r in rows if r.report is not None]
    _write_csv(path, SWEEP_HEADER,
               [(r.max_depth, _fmt(r.height_km), _fmt(r.report.averaged_rmse_normalized),
                 _fmt(r.report.averaged_rmse_ugm3)) for r in ok])
    failed = [r for r in rows if r.report is None]
    err_path = path.with_name(path.stem + "_errors.csv")
    if failed:
        _write_csv(err_path, ("max_depth", "height_km", "error"),
                   [(r.max_depth, _fmt(r.height_km), r.error) for r in failed])
    elif err_path.exists():
        err_path.unlink()
    return path
