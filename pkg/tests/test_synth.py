import filecmp
from dataclasses import replace
from datetime import date, timedelta

import numpy as np
import pytest

from t2g import data_ingest as di
from t2g import experiment as ex
from t2g import preprocess as pp
from t2g import synth
from t2g.errors import InvalidArgument, ManifestMismatch, NoiseFloorViolation
from t2g.smoothing import SgFilterSpec, sg_filter


def test_noiseless_linear_daily_means(tmp_path):
    spec = synth.SynthSpec(n_stations=1, n_days=10, mapping="linear", linear_slope=2.0,
                           linear_intercept=0.0, incomplete_station_count=0)
    fx = synth.generate(spec, tmp_path)
    daily = pp.aggregate_daily(di.parse_ground_dir(fx.ground_dir), 1.0)
    sat = di.parse_satellite_csv(fx.satellite)
    assert len(daily) == 10 and len(sat) == 10
    for (d, g), s in zip(daily.points, sat):
        assert d == s.date
        assert g == pytest.approx(2.0 * s.column_value, rel=1e-12)


def test_columns_in_range(linear_fixture):
    cols = np.concatenate([np.asarray(v) for v in linear_fixture.manifest["true_daily_column"].values()])
    assert cols.min() >= 2e-5 and cols.max() <= 3e-4
    assert np.ptp(np.log(cols)) > 0.8 * np.log(15)


def test_filter_keeps_exactly_43(interaction_fixture):
    ing = interaction_fixture.ingest
    assert len(ing.kept) == 43 and len(ing.dropped) == 4
    assert len(interaction_fixture.tables) == 43
    assert all(len(t) == 211 for t in interaction_fixture.tables)


def test_same_seed_same_bytes(tmp_path):
    spec = synth.SynthSpec(n_stations=3, n_days=15, noise_std=0.02, missing_hour_rate=0.05,
                           incomplete_station_count=1)
    a, b = synth.generate(spec, tmp_path / "a"), synth.generate(spec, tmp_path / "b")
    names = ["satellite.csv", "registry.csv", "manifest.json"] + [f"ground/{p.name}" for p in a.ground_dir.iterdir()]
    match, mismatch, errors = filecmp.cmpfiles(a.root, b.root, names, shallow=False)
    assert not mismatch and not errors and len(match) == len(names)
    c = synth.generate(replace(spec, seed=spec.seed + 1), tmp_path / "c")
    assert c.satellite.read_bytes() != a.satellite.read_bytes()


def test_strict_roundtrip_with_missing_hours(tmp_path):
    spec = synth.SynthSpec(n_stations=4, n_days=20, missing_hour_rate=0.1, incomplete_station_count=0)
    fx = synth.generate(spec, tmp_path)
    records = di.parse_ground_dir(fx.ground_dir)
    errors = []
    assert len(di.parse_ground_dir(fx.ground_dir, collect_errors=errors)) == len(records)
    assert not errors
    assert 0.85 * 4 * 20 * 24 < len(records) < 0.95 * 4 * 20 * 24
    assert len(di.parse_registry(fx.registry)) == 4


def test_piecewise_levels(tmp_path):
    spec = synth.SynthSpec(n_stations=2, n_days=30, mapping="piecewise", incomplete_station_count=0)
    fx = synth.generate(spec, tmp_path)
    man = synth.load_manifest(fx.manifest)
    levels = set(man["mapping"]["levels"])
    for values in man["true_daily_ground"].values():
        assert set(values) <= levels


def test_spec_validation():
    with pytest.raises(InvalidArgument):
        synth.SynthSpec(n_stations=2, incomplete_station_count=3)
    with pytest.raises(InvalidArgument):
        synth.SynthSpec(mapping="cubic")
    with pytest.raises(InvalidArgument):
        synth.SynthSpec(missing_hour_rate=1.0)


def fake_report(manifest, rmse, shift=0.0):
    code = manifest["stations"][0]
    truth = sg_filter(np.asarray(manifest["true_daily_ground"][str(code)]), SgFilterSpec())
    start = date.fromisoformat(manifest["spec"]["start_date"])
    pts = tuple((start + timedelta(days=t), float(v) + shift, float(v)) for t, v in enumerate(truth[:20]))
    return ex.EvalReport({code: ex.StationScore(rmse, rmse, len(pts))}, rmse, rmse, (), {code: pts})


def test_oracle_floor_checks(noisy_linear_fixture):
    man = noisy_linear_fixture.manifest
    assert synth.oracle_rmse(man, fake_report(man, 0.06)) == pytest.approx(0.01)
    assert synth.oracle_rmse(man, fake_report(man, 0.046)) == pytest.approx(-0.004)
    with pytest.raises(NoiseFloorViolation):
        synth.oracle_rmse(man, fake_report(man, 0.03))


def test_oracle_rejects_other_fixture(noisy_linear_fixture, small_fixture):
    _, report = ex.evaluate_tables(small_fixture.tables, ex.ExperimentConfig())
    with pytest.raises(ManifestMismatch):
        synth.oracle_rmse(noisy_linear_fixture.manifest, report)
    # same station codes but different values
    with pytest.raises(ManifestMismatch):
        synth.oracle_rmse(small_fixture.manifest, fake_report(small_fixture.manifest, 0.1, shift=1e3))


def test_oracle_noiseless_margin(tmp_path):
    spec = synth.SynthSpec(n_stations=3, n_days=40, mapping="linear", incomplete_station_count=0)
    fx = synth.generate(spec, tmp_path)
    report = ex.run_experiment(fx.ground_dir, fx.satellite)
    margin = synth.oracle_rmse(synth.load_manifest(fx.manifest), report)
    assert margin == pytest.approx(report.averaged_rmse_normalized, abs=1e-15)
