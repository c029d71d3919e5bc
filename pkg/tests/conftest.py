import time

import pytest

from t2g import data_ingest, experiment, synth
from t2g.config import ExperimentConfig

# Table 1: one station over 1-2 January 2019 (22 hours on the 1st, 10 on the 2nd)
TABLE1_JAN1 = [(h, v) for h, v in zip(range(2, 24),
               [7, 5, 4, 5, 5, 4, 4, 4, 4, 5, 5, 7, 7, 9, 10, 8, 6, 6, 6, 6, 6, 7])]
TABLE1_JAN2 = [(0, 10), (1, 9), (2, 7), (3, 5), (13, 13), (14, 10), (15, 9), (16, 8), (17, 7), (18, 9)]


def _row(day, hour, value):
    end_day, end_hour = (day + 1, 0) if hour == 23 else (day, hour + 1)
    return (f"10000074,8,{day:02d}/01/2019 {hour:02d},{end_day:02d}/01/2019 {end_hour:02d},"
            f"{value},ug/m3")


def table1_text() -> str:
    lines = [",".join(data_ingest.GROUND_HEADER)]
    lines += [_row(1, h, v) for h, v in TABLE1_JAN1]
    lines += [_row(2, h, v) for h, v in TABLE1_JAN2]
    return "\n".join(lines) + "\n"


@pytest.fixture
def table1_csv(tmp_path):
    p = tmp_path / "station_10000074.csv"
    p.write_text(table1_text(), encoding="utf-8")
    return p


class Generated:
    """A synthetic fixture on disk plus its ingested daily tables."""

    def __init__(self, root, spec):
        t0 = time.perf_counter()
        self.spec = spec
        self.fixture = synth.generate(spec, root)
        self.manifest = synth.load_manifest(self.fixture.manifest)
        registry = data_ingest.parse_registry(self.fixture.registry)
        self.ingest = experiment.load_tables(self.fixture.ground_dir, self.fixture.satellite,
                                             ExperimentConfig(), registry)
        self.tables = self.ingest.tables
        self.seconds = time.perf_counter() - t0


@pytest.fixture(scope="session")
def interaction_fixture(tmp_path_factory):
    return Generated(tmp_path_factory.mktemp("interaction"), synth.SynthSpec())


@pytest.fixture(scope="session")
def linear_fixture(tmp_path_factory):
    return Generated(tmp_path_factory.mktemp("linear"), synth.SynthSpec(mapping="linear"))


@pytest.fixture(scope="session")
def noisy_linear_fixture(tmp_path_factory):
    return Generated(tmp_path_factory.mktemp("noisy"),
                     synth.SynthSpec(mapping="linear", noise_std=0.05))


@pytest.fixture(scope="session")
def small_fixture(tmp_path_factory):
    spec = synth.SynthSpec(n_stations=6, n_days=40, incomplete_station_count=1, seed=7)
    return Generated(tmp_path_factory.mktemp("small"), spec)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
