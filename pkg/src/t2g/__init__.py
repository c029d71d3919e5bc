"""Ground-level NO2 estimation from satellite tropospheric columns."""

__version__ = "0.1.0"
