"""Synthetic fixtures with a known satellite-to-ground mapping.

Daily satellite columns are drawn log-uniform on [2e-5, 3e-4] mol/m2; the
daily ground mean is a function of the same day's column (plus noise) and is
spread over 24 hourly ARPAE rows with a diurnal profile whose hourly weights
average exactly one, so aggregation recovers the daily mean when no hour is
missing.

``noise_std`` is expressed in normalized target units: the injected noise is
low-frequency (Gaussian-filtered white noise, so smoothing leaves it almost
untouched) and its amplitude is calibrated so that its standard deviation,
after smoothing, equals ``noise_std`` times the range of the smoothed pooled
target of the complete stations.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .data_ingest import (HourlyGroundRecord, SatelliteDailyRecord, StationInfo, StationRegistry,
                          write_ground_csv, write_registry, write_satellite_csv)
from .errors import IoError, InvalidArgument, ManifestMismatch, NoiseFloorViolation
from .smoothing import SgFilterSpec, sg_filter

MAPPINGS = ("linear", "piecewise", "interaction")
COLUMN_RANGE = (2e-5, 3e-4)
FIRST_STATION_CODE = 10000074
# share of days removed from an incomplete station; must exceed 1 - min_completeness
GAP_FRACTION = 0.25
MANIFEST_NAME = "manifest.json"
LEVEL_STEP = 10.0  # ug/m3 between consecutive station levels


@dataclass(frozen=True)
class SynthSpec:
    n_stations: int = 47
    n_days: int = 211
    seed: int = 2019
    mapping: str = "interaction"
    noise_std: float = 0.0
    missing_hour_rate: float = 0.0
    incomplete_station_count: int = 4
    start_date: date = date(2019, 1, 1)
    linear_slope: float = 1.5e5
    linear_intercept: float = 5.0
    noise_correlation_days: float = 2.0
    column_correlation_days: float = 2.0

    def __post_init__(self):
        if self.n_stations < 1 or self.n_days < 1:
            raise InvalidArgument("n_stations and n_days must be positive")
        if self.mapping not in MAPPINGS:
            raise InvalidArgument(f"mapping must be one of {MAPPINGS}")
        if not self.noise_std >= 0:
            raise InvalidArgument("noise_std must be non-negative")
        if not 0.0 <= self.missing_hour_rate < 1.0:
            raise InvalidArgument("missing_hour_rate must lie in [0, 1)")
        if not 0 <= self.incomplete_station_count <= self.n_stations:
            raise InvalidArgument("incomplete_station_count must lie in [0, n_stations]")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidArgument("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Fixture:
    root: Path
    ground_dir: Path
    satellite: Path
    registry: Path
    manifest: Path


def _diurnal_weights(rng: np.random.Generator) -> np.ndarray:
    hours = np.arange(24)
    # two traffic peaks (morning, evening) on a flat base
    shape = (1.0 + 0.35 * np.exp(-0.5 * ((hours - 8) / 2.0) ** 2)
             + 0.45 * np.exp(-0.5 * ((hours - 19) / 2.5) ** 2))
    w = shape * (1.0 + 0.1 * rng.uniform(-1.0, 1.0, size=24))
    return w / w.mean()


def _smooth_noise(rng: np.random.Generator, n_stations: int, n_days: int, corr: float) -> np.ndarray:
    white = rng.standard_normal((n_stations, n_days))
    half = int(math.ceil(4 * corr))
    if corr > 0 and n_days > half:
        k = np.exp(-0.5 * (np.arange(-half, half + 1) / corr) ** 2)
        k /= k.sum()
        padded = np.pad(white, ((0, 0), (half, half)), mode="reflect")
        white = np.stack([np.convolve(row, k, mode="valid") for row in padded])
    white = white - white.mean(axis=1, keepdims=True)
    sd = white.std(axis=1, keepdims=True)
    return np.divide(white, sd, out=np.zeros_like(white), where=sd > 0)


_erf = np.vectorize(math.erf, otypes=[float])


def _mapping(spec: SynthSpec, rng: np.random.Generator, codes: list[int]):
    """Return (function of (station index, columns) -> ground means, manifest description)."""
    a, b = spec.linear_slope, spec.linear_intercept
    if spec.mapping == "linear":
        return (lambda i, s: a * s + b), {"slope": a, "intercept": b}
    if spec.mapping == "piecewise":
        lo, hi = COLUMN_RANGE
        edges = [float(e) for e in np.geomspace(lo, hi, 5)[1:-1]]
        levels = [float(b + a * hi * k / 3.0) for k in range(4)]
        return (lambda i, s: np.asarray(levels)[np.searchsorted(edges, s, side="right")],
                {"edges": edges, "levels": levels})
    # interaction: each station has its own level and its own slope; levels are
    # spaced widely enough for the station's target mean to identify it
    ranks = rng.permutation(len(codes))
    levels = b + LEVEL_STEP * ranks
    slopes = rng.uniform(0.3, 1.7, size=len(codes))

    def f(i, s):
        return levels[i] + slopes[i] * a * s

    desc = {"form": "level + slope * a * s", "a": a,
            "stations": {str(c): {"level": float(levels[i]), "slope": float(slopes[i])}
                         for i, c in enumerate(codes)}}
    return f, desc


def _calibrate_sigma(clean: np.ndarray, noise: np.ndarray, target: float, sg: SgFilterSpec) -> float:
    """Absolute noise amplitude whose smoothed std is ``target`` times the range
    of the smoothed noisy pooled series."""
    if target == 0 or clean.shape[1] < sg.window:
        return target * float(np.ptp(clean)) if target else 0.0
    smooth = lambda m: np.stack([sg_filter(r, sg) for r in m])
    sn = smooth(noise)
    sc = smooth(clean)
    noise_sd = float(sn.std())
    sigma = target * float(np.ptp(sc)) / noise_sd
    for _ in range(50):
        nxt = target * float(np.ptp(sc + sigma * sn)) / noise_sd
        if abs(nxt - sigma) <= 1e-12 * sigma:
            break
        sigma = nxt
    return sigma


def generate(spec: SynthSpec, out_dir, sg: SgFilterSpec | None = None) -> Fixture:
    """Write ground CSVs, satellite CSV, registry and manifest under ``out_dir``."""
    sg = sg or SgFilterSpec()
    rng = np.random.default_rng(spec.seed)
    codes = [FIRST_STATION_CODE + i for i in range(spec.n_stations)]
    days = [spec.start_date + timedelta(days=t) for t in range(spec.n_days)]

    lo, hi = COLUMN_RANGE
    # smooth Gaussian process pushed through the normal CDF: uniform marginals,
    # hence log-uniform columns, with day-to-day persistence
    z = _smooth_noise(rng, spec.n_stations, spec.n_days, spec.column_correlation_days)
    u = np.clip(0.5 * (1.0 + _erf(z / math.sqrt(2.0))), 0.0, 1.0)
    columns = np.exp(math.log(lo) + u * math.log(hi / lo))
    f, mapping_desc = _mapping(spec, rng, codes)
    clean = np.stack([f(i, columns[i]) for i in range(spec.n_stations)])

    incomplete = sorted(rng.choice(spec.n_stations, size=spec.incomplete_station_count,
                                   replace=False).tolist())
    complete = [i for i in range(spec.n_stations) if i not in set(incomplete)]
    noise_unit = _smooth_noise(rng, spec.n_stations, spec.n_days, spec.noise_correlation_days)
    sigma = _calibrate_sigma(clean[complete], noise_unit[complete], spec.noise_std, sg) \
        if complete else 0.0
    ground = np.maximum(clean + sigma * noise_unit, 0.0)

    gap_days = min(spec.n_days, math.ceil(GAP_FRACTION * spec.n_days))
    gaps = {}
    for i in incomplete:
        start = int(rng.integers(0, spec.n_days - gap_days + 1))
        gaps[i] = (start, start + gap_days)

    root = Path(out_dir)
    ground_dir = root / "ground"
    try:
        ground_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {ground_dir}: {exc.strerror or exc}") from exc

    for i, code in enumerate(codes):
        records = []
        for t, day in enumerate(days):
            if i in gaps and gaps[i][0] <= t < gaps[i][1]:
                continue
            weights = _diurnal_weights(rng)
            keep = rng.uniform(size=24) >= spec.missing_hour_rate
            start = datetime(day.year, day.month, day.day)
            for h in range(24):
                if keep[h]:
                    ts = start + timedelta(hours=h)
                    records.append(HourlyGroundRecord(code, 8, ts, ts + timedelta(hours=1),
                                                      float(ground[i, t] * weights[h])))
        write_ground_csv(records, ground_dir / f"station_{code}.csv")

    sat = [SatelliteDailyRecord(code, day, float(columns[i, t]))
           for i, code in enumerate(codes) for t, day in enumerate(days)]
    write_satellite_csv(sat, root / "satellite.csv")

    reg_rng = np.random.default_rng(spec.seed + 1)
    registry = StationRegistry(tuple(
        StationInfo(code, round(float(reg_rng.uniform(43.8, 45.1)), 5),
                    round(float(reg_rng.uniform(9.2, 12.7)), 5), f"SYNTH-{code}")
        for code in codes))
    write_registry(registry, root / "registry.csv")

    manifest = {
        "spec": {k: (v.isoformat() if isinstance(v, date) else v) for k, v in asdict(spec).items()},
        "mapping": mapping_desc,
        "stations": codes,
        "incomplete_stations": [codes[i] for i in incomplete],
        "gap_fraction": GAP_FRACTION,
        "noise_std": spec.noise_std,
        "noise_sigma_ugm3": sigma,
        "noise_reference": {"sg.window": sg.window, "sg.polyorder": sg.polyorder,
                            "sg.edge_mode": sg.edge_mode},
        "true_daily_ground": {str(c): [float(v) for v in ground[i]] for i, c in enumerate(codes)},
        "true_daily_column": {str(c): [float(v) for v in columns[i]] for i, c in enumerate(codes)},
    }
    manifest_path = root / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return Fixture(root, ground_dir, root / "satellite.csv", root / "registry.csv", manifest_path)


def load_manifest(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _check_same_fixture(manifest: dict, report, max_deviation: float = 0.05) -> None:
    """The report's ground-truth series must match the manifest's daily means
    once smoothed the same way; median deviation is measured against the range."""
    known = {str(c) for c in manifest.get("stations", ())}
    stations = {str(s) for s in report.per_station}
    if not stations or not stations <= known:
        raise ManifestMismatch("report stations do not belong to this fixture")
    ref = manifest["noise_reference"]
    sg = SgFilterSpec(ref["sg.window"], ref["sg.polyorder"], ref["sg.edge_mode"])
    start = date.fromisoformat(manifest["spec"]["start_date"])
    truth = manifest["true_daily_ground"]
    scale = max(float(np.ptp(np.concatenate([np.asarray(v) for v in truth.values()]))), 1e-300)
    deviations = []
    for s, points in report.series.items():
        full = np.asarray(truth[str(s)])
        smooth = sg_filter(full, sg) if len(full) >= sg.window else full
        for d, gt, _ in points:
            t = (d - start).days
            if not 0 <= t < len(full):
                raise ManifestMismatch(f"report date {d} outside the fixture period")
            deviations.append(abs(gt - smooth[t]) / scale)
    if deviations and float(np.median(deviations)) > max_deviation:
        raise ManifestMismatch("report ground truth does not match the fixture's daily means")


def oracle_rmse(manifest: dict, report, tolerance: float | None = None) -> float:
    """Check a report against the fixture's noise floor; return achieved - floor.

    The floor is the injected noise level in normalized units. Raises
    ``NoiseFloorViolation`` when the report beats it by more than ``tolerance``
    (default 10% of the floor), and ``ManifestMismatch`` when the report was
    not produced from this fixture.
    """
    _check_same_fixture(manifest, report)
    floor = float(manifest["noise_std"])
    tol = 0.1 * floor if tolerance is None else tolerance
    achieved = report.averaged_rmse_normalized
    if achieved < floor - tol:
        raise NoiseFloorViolation(
            f"achieved RMSE {achieved:.5f} is below the noise floor {floor:.5f} - {tol:.5f}")
    return achieved - floor
