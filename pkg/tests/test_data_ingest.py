from datetime import date, datetime, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from t2g import data_ingest as di
from t2g.errors import DuplicateKey, IoError, MalformedRow, NegativeValue, UnitMismatch

HEADER = ",".join(di.GROUND_HEADER)


def write(tmp_path, name, body):
    p = tmp_path / name
    p.write_text(body, encoding="utf-8")
    return p


def test_table1_row_parses(tmp_path):
    p = write(tmp_path, "g.csv", HEADER + "\n10000074, 8, 01/01/2019 02, 01/01/2019 03, 7, ug/m3\n")
    (rec,) = di.parse_ground_csv(p)
    assert rec.station_code == 10000074
    assert rec.sensor_id == 8
    assert rec.start == datetime(2019, 1, 1, 2)
    assert rec.end == datetime(2019, 1, 1, 3)
    assert rec.value == 7.0 and rec.unit == "ug/m3"


def test_table1_file_counts(table1_csv):
    records = di.parse_ground_csv(table1_csv)
    assert len(records) == 32
    assert records[21].start == datetime(2019, 1, 1, 23)
    assert records[21].end == datetime(2019, 1, 2, 0)


def test_header_only_is_empty(tmp_path):
    assert di.parse_ground_csv(write(tmp_path, "g.csv", HEADER + "\n")) == []


def test_unit_mismatch(tmp_path):
    p = write(tmp_path, "g.csv", HEADER + "\n10000074,8,01/01/2019 02,01/01/2019 03,7,mg/m3\n")
    with pytest.raises(UnitMismatch) as exc:
        di.parse_ground_csv(p)
    assert exc.value.line_no == 2


@pytest.mark.parametrize("row, line", [
    ("10000074,8,01/01/2019 02,01/01/2019 03,7", "field count"),
    ("10000074,8,2019-01-01 02,01/01/2019 03,7,ug/m3", "timestamp"),
    ("10000074,8,01/01/2019 02,01/01/2019 03,seven,ug/m3", "value"),
    ("10000074,8,01/01/2019 02,01/01/2019 05,7,ug/m3", "span"),
])
def test_malformed_rows(tmp_path, row, line):
    p = write(tmp_path, "g.csv", HEADER + "\n10000074,8,01/01/2019 01,01/01/2019 02,7,ug/m3\n" + row + "\n")
    with pytest.raises(MalformedRow) as exc:
        di.parse_ground_csv(p)
    assert exc.value.line_no == 3, line


def test_negative_ground_value(tmp_path):
    p = write(tmp_path, "g.csv", HEADER + "\n10000074,8,01/01/2019 02,01/01/2019 03,-1,ug/m3\n")
    with pytest.raises(NegativeValue):
        di.parse_ground_csv(p)


def test_bad_header(tmp_path):
    with pytest.raises(MalformedRow):
        di.parse_ground_csv(write(tmp_path, "g.csv", "a,b,c,d,e,f\n"))


def test_missing_file(tmp_path):
    with pytest.raises(IoError):
        di.parse_ground_csv(tmp_path / "absent.csv")
    with pytest.raises(IoError):
        di.parse_ground_dir(tmp_path / "absent")


def test_comma_decimal(tmp_path):
    p = write(tmp_path, "g.csv", HEADER + '\n10000074,8,01/01/2019 02,01/01/2019 03,"7,5",ug/m3\n')
    assert di.parse_ground_csv(p)[0].value == 7.5
    assert di.parse_number("46,055") == 46.055
    with pytest.raises(ValueError):
        di.parse_number("1,000.5")


def test_collecting_mode_counts_every_row(tmp_path):
    rows = [
        "10000074,8,01/01/2019 00,01/01/2019 01,7,ug/m3",
        "10000074,8,01/01/2019 01,01/01/2019 02,x,ug/m3",
        "10000074,8,01/01/2019 02,01/01/2019 03,7,mg/m3",
        "10000074,8,01/01/2019 03,01/01/2019 04,-2,ug/m3",
        "10000074,8,01/01/2019 04,01/01/2019 05,6,ug/m3",
    ]
    p = write(tmp_path, "g.csv", HEADER + "\n" + "\n".join(rows) + "\n")
    errors = []
    records = di.parse_ground_csv(p, collect_errors=errors)
    assert len(records) == 2 and len(errors) == 3
    assert [e.line_no for e in errors] == [3, 4, 5]
    with pytest.raises(MalformedRow):
        di.parse_ground_csv(p)


def test_satellite_parse_and_errors(tmp_path):
    head = "station_code,date,no2_mol_m2\n"
    (rec,) = di.parse_satellite_csv(write(tmp_path, "s.csv", head + "10000074,2019-01-01,1.3e-4\n"))
    assert rec == di.SatelliteDailyRecord(10000074, date(2019, 1, 1), 1.3e-4)
    dup = head + "10000074,2019-01-01,1.3e-4\n10000074,2019-01-01,1.4e-4\n"
    with pytest.raises(DuplicateKey):
        di.parse_satellite_csv(write(tmp_path, "d.csv", dup))
    with pytest.raises(NegativeValue):
        di.parse_satellite_csv(write(tmp_path, "n.csv", head + "10000074,2019-01-01,-1e-5\n"))
    with pytest.raises(MalformedRow):
        di.parse_satellite_csv(write(tmp_path, "m.csv", head + "10000074,01/01/2019,1e-5\n"))


def test_registry_roundtrip_and_validation(tmp_path):
    reg = di.StationRegistry((di.StationInfo(1, 44.5, 11.3, "A"), di.StationInfo(2, -10.0, 170.0, "B")))
    p = tmp_path / "r.csv"
    di.write_registry(reg, p)
    assert di.parse_registry(p) == reg
    with pytest.raises(ValueError):
        di.StationRegistry((di.StationInfo(1, 0, 0, "A"), di.StationInfo(1, 1, 1, "B")))
    with pytest.raises(ValueError):
        di.StationRegistry((di.StationInfo(1, 91.0, 0, "A"),))


# -- filter_stations -------------------------------------------------------------

def full_days(station, first, n_days, skip=()):
    out = []
    for t in range(n_days):
        if t in skip:
            continue
        start = datetime(first.year, first.month, first.day) + timedelta(days=t)
        out += [di.HourlyGroundRecord(station, 8, start + timedelta(hours=h),
                                      start + timedelta(hours=h + 1), 5.0) for h in range(24)]
    return out


D0 = date(2019, 1, 1)
RANGE10 = (D0, D0 + timedelta(days=9))


def test_filter_drops_half_missing_station():
    recs = full_days(1, D0, 10) + full_days(2, D0, 10) + full_days(3, D0, 10) \
        + full_days(4, D0, 10, skip=range(5))
    kept, dropped = di.filter_stations(recs, None, RANGE10, 0.9)
    assert kept == [1, 2, 3] and dropped == [4]


def test_filter_full_completeness_with_gaps():
    recs = [r for s in (1, 2, 3) for r in full_days(s, D0, 10, skip={s})]
    assert di.filter_stations(recs, None, RANGE10, 1.0) == ([], [1, 2, 3])


def test_filter_empty_input():
    assert di.filter_stations([], None, RANGE10, 0.5) == ([], [])


def test_filter_uses_coverage_rule():
    # a day with only 10 hours does not count as present
    recs = full_days(1, D0, 10)
    thin = [r for r in recs if not (r.start.date() == D0 and r.start.hour >= 10)]
    assert di.filter_stations(thin, None, RANGE10, 1.0) == ([], [1])
    assert di.filter_stations(thin, None, RANGE10, 0.9) == ([1], [])


def test_filter_with_registry():
    recs = full_days(1, D0, 10) + full_days(9, D0, 10)
    reg = di.StationRegistry((di.StationInfo(1, 44.0, 11.0, "A"), di.StationInfo(2, 44.0, 11.0, "B")))
    kept, dropped = di.filter_stations(recs, reg, RANGE10, 0.9)
    assert kept == [1] and dropped == [2, 9]


def test_filter_rejects_bad_threshold():
    with pytest.raises(ValueError):
        di.filter_stations([], None, RANGE10, 0.0)


def test_filter_47_to_43(interaction_fixture):
    assert len(interaction_fixture.ingest.kept) + len(interaction_fixture.ingest.dropped) == 47
    assert len(interaction_fixture.ingest.kept) == 43
    assert sorted(interaction_fixture.ingest.dropped) == sorted(interaction_fixture.manifest["incomplete_stations"])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=1, max_size=6), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_filter_is_monotone(missing, t1, t2):
    recs = [r for s, m in enumerate(missing) for r in full_days(s, D0, 10, skip=range(m))]
    lo, hi = sorted((t1, t2))
    kept_lo, dropped_lo = di.filter_stations(recs, None, RANGE10, lo)
    kept_hi, _ = di.filter_stations(recs, None, RANGE10, hi)
    assert set(kept_hi) <= set(kept_lo)
    assert set(kept_lo) | set(dropped_lo) == set(range(len(missing)))


record_st = st.builds(
    lambda station, sensor, hours, value: di.HourlyGroundRecord(
        station, sensor, datetime(2019, 1, 1) + timedelta(hours=hours),
        datetime(2019, 1, 1) + timedelta(hours=hours + 1), value),
    st.integers(1, 10 ** 9), st.integers(0, 999), st.integers(0, 24 * 400),
    st.floats(0, 1e4, allow_nan=False, allow_infinity=False))


@settings(max_examples=60, deadline=None)
@given(st.lists(record_st, max_size=30))
def test_ground_roundtrip(tmp_path_factory, records):
    p = tmp_path_factory.mktemp("rt") / "g.csv"
    di.write_ground_csv(records, p)
    assert di.parse_ground_csv(p) == records


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.tuples(st.integers(1, 99), st.integers(0, 400)),
                       st.floats(0, 1e-3, allow_nan=False), max_size=20))
def test_satellite_roundtrip(tmp_path_factory, values):
    recs = [di.SatelliteDailyRecord(s, D0 + timedelta(days=d), v) for (s, d), v in values.items()]
    p = tmp_path_factory.mktemp("rt") / "s.csv"
    di.write_satellite_csv(recs, p)
    assert di.parse_satellite_csv(p) == recs
