import random
from datetime import date, datetime, timedelta
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from t2g import data_ingest as di
from t2g import preprocess as pp
from t2g.errors import DuplicateKey, InvalidArgument, KindMismatch, MixedStations
from t2g.preprocess import ConversionSpec, DailySeries, SeriesKind

D0 = date(2019, 1, 1)


def hourly(station, day, hours, values):
    start = datetime(day.year, day.month, day.day)
    return [di.HourlyGroundRecord(station, 8, start + timedelta(hours=h), start + timedelta(hours=h + 1), v)
            for h, v in zip(hours, values)]


def test_table1_aggregation(table1_csv):
    series = pp.aggregate_daily(di.parse_ground_csv(table1_csv), 0.75)
    assert series.dates == [D0]
    assert series.values[0] == pytest.approx(130 / 22, abs=1e-12)
    assert Fraction(sum([7, 5, 4, 5, 5, 4, 4, 4, 4, 5, 5, 7, 7, 9, 10, 8, 6, 6, 6, 6, 6, 7]), 22) == Fraction(130, 22)
    # the Jan-2 day reaches 10/24 < 0.75 but is kept once the threshold drops below it
    low = pp.aggregate_daily(di.parse_ground_csv(table1_csv), 0.4)
    assert low.dates == [D0, D0 + timedelta(days=1)]
    assert low.values[1] == pytest.approx(87 / 10, abs=1e-12)


def test_late_slot_belongs_to_earlier_day():
    recs = hourly(1, D0, range(24), [1.0] * 23 + [25.0])
    assert recs[-1].end.date() == D0 + timedelta(days=1)
    series = pp.aggregate_daily(recs, 1.0)
    assert series.points == ((D0, 2.0),)


def test_constant_day():
    assert pp.aggregate_daily(hourly(3, D0, range(24), [4.25] * 24)).points == ((D0, 4.25),)


def test_aggregate_errors():
    with pytest.raises(MixedStations):
        pp.aggregate_daily(hourly(1, D0, [0], [1.0]) + hourly(2, D0, [1], [1.0]))
    with pytest.raises(DuplicateKey):
        pp.aggregate_daily(hourly(1, D0, [0, 0], [1.0, 2.0]))
    with pytest.raises(InvalidArgument):
        pp.aggregate_daily(hourly(1, D0, [0], [1.0]), 0.0)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0, 500, allow_nan=False), min_size=18, max_size=24), st.randoms())
def test_aggregate_bounds_and_order_invariance(values, rnd):
    recs = hourly(5, D0, range(len(values)), values)
    series = pp.aggregate_daily(recs)
    (v,) = series.values
    assert min(values) <= v <= max(values)
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    assert pp.aggregate_daily(shuffled) == series


def test_convert_column_examples():
    spec = ConversionSpec(13.0)
    assert pp.convert_column(0.0, spec) == 0.0
    assert pp.convert_column(0.0, ConversionSpec(8.0)) == 0.0
    assert pp.convert_column(1.3e-4, spec) == pytest.approx(0.46055, abs=1e-12)
    hand = float(Fraction("1.3e-4") / 13 * 1000 * Fraction("46.055"))
    assert pp.convert_column(1.3e-4, spec) == pytest.approx(hand, abs=1e-15)
    r = pp.convert_column(2e-4, ConversionSpec(8.0)) / pp.convert_column(2e-4, ConversionSpec(20.0))
    assert r == pytest.approx(2.5, rel=1e-14)


def test_conversion_spec_validation():
    for h in (7.99, 20.01):
        with pytest.raises(InvalidArgument):
            ConversionSpec(h)
    with pytest.raises(InvalidArgument):
        ConversionSpec(13.0, molar_mass_g_per_mol=0.0)
    with pytest.raises(InvalidArgument):
        pp.convert_column(-1e-5, ConversionSpec())


def sat(station, pairs):
    return DailySeries(station, SeriesKind.SATELLITE, tuple(pairs))


def test_convert_series():
    spec = ConversionSpec()
    assert len(pp.convert_series(sat(1, []), spec)) == 0
    s = sat(1, [(D0 + timedelta(days=k), 1e-4 * (k + 1)) for k in range(3)])
    out = pp.convert_series(s, spec)
    assert out.kind is SeriesKind.SATELLITE_CONVERTED and out.dates == s.dates
    assert out.values == [pp.convert_column(v, spec) for v in s.values]
    flat = pp.convert_series(sat(1, [(D0 + timedelta(days=k), 5e-5) for k in range(4)]), spec)
    assert len(set(flat.values)) == 1
    with pytest.raises(KindMismatch):
        pp.convert_series(DailySeries(1, SeriesKind.GROUND, ()), spec)


def trio(station, ground_days, sat_days):
    g = DailySeries(station, SeriesKind.GROUND, tuple((D0 + timedelta(days=d), 10.0 + d) for d in ground_days))
    r = sat(station, [(D0 + timedelta(days=d), 1e-4 + d * 1e-6) for d in sat_days])
    return g, r, pp.convert_series(r, ConversionSpec())


def test_align_examples():
    t = pp.align(*trio(1, [1, 2, 3], [2, 3, 4]))
    assert [r.date for r in t.rows] == [D0 + timedelta(days=2), D0 + timedelta(days=3)]
    assert t.rows[0].ground_ugm3 == 12.0 and t.rows[0].satellite_molm2 == 1e-4 + 2e-6
    assert len(pp.align(*trio(1, [1, 2], [5, 6]))) == 0
    assert len(pp.align(*trio(1, range(6), range(6)))) == 6
    g, _, _ = trio(1, [1], [1])
    _, r, c = trio(2, [1], [1])
    with pytest.raises(MixedStations):
        pp.align(g, r, c)


@settings(max_examples=60, deadline=None)
@given(st.sets(st.integers(0, 40)), st.sets(st.integers(0, 40)))
def test_align_properties(gd, sd):
    g, r, c = trio(9, sorted(gd), sorted(sd))
    t = pp.align(g, r, c)
    assert len(t) <= min(len(g), len(r), len(c))
    dates = [row.date for row in t.rows]
    assert dates == sorted(dates)
    assert set(dates) == set(g.dates) & set(r.dates) & set(c.dates)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1e-2, allow_nan=False), st.floats(0, 1e3, allow_nan=False), st.floats(8, 20))
def test_conversion_homogeneous(v, alpha, h):
    spec = ConversionSpec(h)
    assert pp.convert_column(alpha * v, spec) == pytest.approx(alpha * pp.convert_column(v, spec),
                                                               rel=1e-12, abs=1e-300)


def test_conversion_1000_random_inputs():
    rnd = random.Random(8)
    for _ in range(1000):
        v, a = rnd.uniform(0, 1e-3), rnd.uniform(0, 50)
        h1, h2 = rnd.uniform(8, 20), rnd.uniform(8, 20)
        assert pp.convert_column(a * v, ConversionSpec(h1)) == pytest.approx(
            a * pp.convert_column(v, ConversionSpec(h1)), rel=1e-12, abs=1e-300)
        assert pp.convert_column(v, ConversionSpec(h1)) * h1 == pytest.approx(
            pp.convert_column(v, ConversionSpec(h2)) * h2, rel=1e-12, abs=1e-300)


def test_daily_series_invariants():
    with pytest.raises(ValueError):
        DailySeries(1, SeriesKind.GROUND, ((D0, 1.0), (D0, 2.0)))
    with pytest.raises(ValueError):
        DailySeries(1, SeriesKind.GROUND, ((D0, -1.0),))
    s = DailySeries(1, SeriesKind.GROUND, ((D0, -1.0),), smoothed=True)
    assert s.unit == "ug/m3"


def test_daily_table_roundtrip(tmp_path, small_fixture):
    p = tmp_path / "daily.csv"
    pp.write_daily_tables(small_fixture.tables, p)
    assert [tuple(t.rows) for t in pp.read_daily_tables(p)] == [tuple(t.rows) for t in small_fixture.tables]
    assert p.read_text().splitlines()[0] == "station_code,date,ground_ugm3,sat_molm2,sat_conv_ugm3"
    first = p.read_bytes()
    pp.write_daily_tables(pp.read_daily_tables(p), p)
    assert p.read_bytes() == first


def test_reconvert_changes_only_converted_column(small_fixture):
    t = small_fixture.tables[0]
    r = pp.reconvert(t, ConversionSpec(20.0))
    assert r.column("ground_ugm3") == t.column("ground_ugm3")
    assert r.column("satellite_molm2") == t.column("satellite_molm2")
    for a, b in zip(t.column("satellite_converted_ugm3"), r.column("satellite_converted_ugm3")):
        assert b == pytest.approx(a * 13.0 / 20.0, rel=1e-12)
