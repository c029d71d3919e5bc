"""Exception hierarchy.

Everything raised deliberately by the package derives from ``T2GError`` so the
CLI can map it to the data-error exit code; argument validation failures also
derive from ``ValueError``.
"""


class T2GError(Exception):
    """Base class for all package errors."""


class InvalidArgument(T2GError, ValueError):
    pass


class IoError(T2GError, OSError):
    """A file could not be read or written."""


# -- ingestion -----------------------------------------------------------------

class MalformedRow(T2GError):
    def __init__(self, line_no, reason="malformed row", path=None):
        self.line_no = line_no
        self.reason = reason
        self.path = path
        where = f"{path}:" if path else ""
        super().__init__(f"{where}line {line_no}: {reason}")


class UnitMismatch(MalformedRow):
    def __init__(self, line_no, got, expected, path=None):
        self.got = got
        self.expected = expected
        super().__init__(line_no, f"unit {got!r} != expected {expected!r}", path)


class NegativeValue(MalformedRow):
    def __init__(self, line_no, value, path=None):
        self.value = value
        super().__init__(line_no, f"negative value {value!r}", path)


class DuplicateKey(T2GError):
    def __init__(self, station, when, line_no=None):
        self.station = station
        self.when = when
        self.line_no = line_no
        at = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"duplicate record for station {station} at {when}{at}")


# -- preprocessing -------------------------------------------------------------

class MixedStations(T2GError):
    def __init__(self, stations):
        self.stations = sorted(stations)
        super().__init__(f"records span several stations: {self.stations}")


class KindMismatch(T2GError):
    def __init__(self, got, expected):
        super().__init__(f"series kind {got} where {expected} was expected")


# -- smoothing -----------------------------------------------------------------

class InvalidSpec(InvalidArgument):
    pass


class SeriesTooShort(T2GError):
    def __init__(self, needed, got):
        self.needed = needed
        self.got = got
        super().__init__(f"series too short for filter window: needed {needed}, got {got}")


# -- model ---------------------------------------------------------------------

class EmptyDataset(T2GError):
    pass


class InvalidParams(InvalidArgument):
    pass


class ArityMismatch(T2GError):
    def __init__(self, got, expected):
        super().__init__(f"sample has {got} features, model expects {expected}")


class FormatVersionMismatch(T2GError):
    pass


# -- experiment ----------------------------------------------------------------

class LengthMismatch(T2GError):
    pass


class EmptyVectors(T2GError):
    pass


class DatasetTooSmall(T2GError):
    pass


class EmptyGrid(InvalidArgument):
    pass


class NoTestSamplesForStation(T2GError):
    def __init__(self, station):
        self.station = station
        super().__init__(f"station {station} has no test samples")


# -- synth ---------------------------------------------------------------------

class ManifestMismatch(T2GError):
    pass


class NoiseFloorViolation(T2GError):
    pass


# -- config --------------------------------------------------------------------

class ConfigError(InvalidArgument):
    pass
