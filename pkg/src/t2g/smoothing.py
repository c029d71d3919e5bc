"""Savitzky-Golay smoothing.

Weights come from the least-squares polynomial fit over window offsets
``-m..m``: with Vandermonde matrix ``A`` (rows ``[u^0 .. u^p]``) the value of
the fit at offset ``t`` is ``A (A^T A)^-1 v(t) . x``. Offsets are scaled by
``1/m`` before building ``A`` to keep the normal equations well conditioned.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidSpec, SeriesTooShort
from .preprocess import DailySeries

MAX_WINDOW = 51
EDGE_MODES = ("mirror", "polynomial_fit")


@dataclass(frozen=True)
class SgFilterSpec:
    window: int = 7
    polyorder: int = 2
    edge_mode: str = "mirror"

    def __post_init__(self):
        if not isinstance(self.window, int) or self.window < 3 or self.window % 2 == 0:
            raise InvalidSpec(f"window must be an odd integer >= 3, got {self.window!r}")
        if self.window > MAX_WINDOW:
            raise InvalidSpec(f"window {self.window} exceeds cap {MAX_WINDOW}")
        if not isinstance(self.polyorder, int) or not 0 <= self.polyorder < self.window:
            raise InvalidSpec(f"polyorder must satisfy 0 <= polyorder < window")
        if self.edge_mode not in EDGE_MODES:
            raise InvalidSpec(f"edge_mode must be one of {EDGE_MODES}")

    @property
    def half(self) -> int:
        return (self.window - 1) // 2


def solve(a, b):
    """Gaussian elimination with partial pivoting for a small dense system."""
    a = [list(map(float, row)) for row in a]
    b = [float(x) for x in b]
    n = len(a)
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0.0:
            raise InvalidSpec("singular normal equations")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            b[col], b[piv] = b[piv], b[col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                for c in range(col, n):
                    a[r][c] -= f * a[col][c]
                b[r] -= f * b[col]
    x = [0.0] * n
    for r in range(n - 1, -1, -1):
        s = b[r] - sum(a[r][c] * x[c] for c in range(r + 1, n))
        x[r] = s / a[r][r]
    return x


@lru_cache(maxsize=256)
def _weights_at(window: int, polyorder: int, offset: int) -> tuple[float, ...]:
    m = (window - 1) // 2
    scale = float(m)
    u = [i / scale for i in range(-m, m + 1)]
    cols = polyorder + 1
    vander = [[ui ** k for k in range(cols)] for ui in u]
    normal = [[sum(row[i] * row[j] for row in vander) for j in range(cols)] for i in range(cols)]
    t = offset / scale
    coef = solve(normal, [t ** k for k in range(cols)])
    return tuple(sum(row[k] * coef[k] for k in range(cols)) for row in vander)


def sg_weights(spec: SgFilterSpec, offset: int = 0) -> np.ndarray:
    """Weights evaluating the window fit at ``offset`` (0 is the centre)."""
    if not -spec.half <= offset <= spec.half:
        raise InvalidSpec(f"offset {offset} outside the window")
    return np.array(_weights_at(spec.window, spec.polyorder, offset))


def sg_coefficients(spec: SgFilterSpec) -> np.ndarray:
    """Central smoothing weights; they sum to one and are symmetric."""
    return sg_weights(spec, 0)


def sg_filter(values, spec: SgFilterSpec) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError("sg_filter expects a 1-D sequence")
    if len(x) < spec.window:
        raise SeriesTooShort(spec.window, len(x))
    if not np.all(np.isfinite(x)):
        raise ValueError("sg_filter input must be finite")
    m = spec.half
    w = sg_coefficients(spec)
    if spec.edge_mode == "mirror":
        # reflect about the edge sample without repeating it: x2 x1 | x0 x1 x2 ...
        padded = np.pad(x, m, mode="reflect")
        return np.correlate(padded, w, mode="valid")
    out = np.empty_like(x)
    out[m:len(x) - m] = np.correlate(x, w, mode="valid")
    head, tail = x[:spec.window], x[-spec.window:]
    for i in range(m):
        out[i] = sg_weights(spec, i - m) @ head
        out[len(x) - m + i] = sg_weights(spec, i + 1) @ tail
    return out


def sg_filter_series(series: DailySeries, spec: SgFilterSpec) -> DailySeries:
    """Smooth a daily series, treating it as uniformly sampled (date gaps are ignored)."""
    smoothed = sg_filter(series.values, spec)
    pts = tuple(zip(series.dates, (float(v) for v in smoothed)))
    return DailySeries(series.station_code, series.kind, pts, smoothed=True, unit=series.unit)
