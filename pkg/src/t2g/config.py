"""Pipeline configuration and the flat ``key = value`` config file.

Example::

    # comments and blank lines are ignored
    conversion.height_km = 13
    model.max_depth = 12
    sg.window = 7
    split.seed = 2019

Keys are ``<section>.<field>`` for the sections below; unknown keys are errors.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from datetime import date
from pathlib import Path

from .errors import ConfigError, InvalidArgument, IoError
from .model import GbdtParams
from .preprocess import DEFAULT_MIN_COVERAGE, ConversionSpec
from .smoothing import SgFilterSpec

CONFIG_ENV = "T2G_CONFIG"


@dataclass(frozen=True)
class AggregationConfig:
    min_coverage: float = DEFAULT_MIN_COVERAGE
    min_completeness: float = 0.9
    start_date: date | None = None
    end_date: date | None = None

    def __post_init__(self):
        if not 0.0 < self.min_coverage <= 1.0 or not 0.0 < self.min_completeness <= 1.0:
            raise InvalidArgument("coverage and completeness thresholds must lie in (0, 1]")
        if self.start_date and self.end_date and self.end_date < self.start_date:
            raise InvalidArgument("aggregation.end_date precedes start_date")


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 2019
    train_fraction: float = 0.8
    # averaged RMSE across stations; weighting by test-sample count is opt-in
    weighted_average: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidArgument("train_fraction must lie strictly between 0 and 1")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise InvalidArgument("seed must be a 64-bit unsigned integer")


# model.seed is not a key: the split seed drives every random choice
_MODEL_EXCLUDED = {"seed"}


@dataclass(frozen=True)
class ExperimentConfig:
    aggregation: AggregationConfig = field(default_factory=AggregationConfig)
    conversion: ConversionSpec = field(default_factory=ConversionSpec)
    sg: SgFilterSpec = field(default_factory=SgFilterSpec)
    model: GbdtParams = field(default_factory=GbdtParams)
    split: SplitSpec = field(default_factory=SplitSpec)

    def model_params(self) -> GbdtParams:
        return replace(self.model, seed=self.split.seed)

    def with_overrides(self, overrides: dict[str, object]) -> "ExperimentConfig":
        """Return a copy with dotted keys replaced; values may be text or typed."""
        grouped: dict[str, dict[str, object]] = {}
        known = config_keys()
        for key, value in overrides.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            section, name = key.split(".", 1)
            grouped.setdefault(section, {})[name] = _coerce(key, known[key], value)
        cfg = self
        try:
            for section, values in grouped.items():
                cfg = replace(cfg, **{section: replace(getattr(cfg, section), **values)})
        except InvalidArgument as exc:
            raise ConfigError(str(exc)) from None
        return cfg

    def flat(self) -> dict[str, object]:
        out = {}
        for key in config_keys():
            section, name = key.split(".", 1)
            out[key] = getattr(getattr(self, section), name)
        return out


def config_keys() -> dict[str, str]:
    """All accepted keys mapped to their declared type."""
    keys = {}
    for sect in fields(ExperimentConfig):
        for f in fields(sect.default_factory):
            if sect.name == "model" and f.name in _MODEL_EXCLUDED:
                continue
            keys[f"{sect.name}.{f.name}"] = str(f.type)
    return keys


def _coerce(key, type_name, value):
    if not isinstance(value, str):
        return value
    text = value.strip()
    try:
        if type_name == "int":
            return int(text)
        if type_name == "float":
            return float(text)
        if type_name == "bool":
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if type_name == "date | None":
            return None if text.lower() in ("", "none") else date.fromisoformat(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{line_no}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{source}:{line_no}: duplicate key {key!r}")
        values[key] = value
    return values


def load_config(path=None, overrides: dict[str, object] | None = None) -> ExperimentConfig:
    """Defaults, then the config file (``path`` or ``$T2G_CONFIG``), then overrides."""
    path = path or os.environ.get(CONFIG_ENV) or None
    cfg = ExperimentConfig()
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        cfg = cfg.with_overrides(parse_config_text(text, str(path)))
    if overrides:
        cfg = cfg.with_overrides(overrides)
    return cfg


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in cfg.flat().items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        elif value is None:
            value = "none"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
