"""Static SVG line charts: ground truth vs model prediction over time."""

from __future__ import annotations

from datetime import date
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 800, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 24, 40, 48
GT_COLOR = "#1f77b4"
PRED_COLOR = "#ff7f0e"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def line_chart(points: Sequence[tuple[date, float, float]], title: str,
               y_label: str = "NO2 [ug/m3]") -> str:
    """Two polylines (labelled "GT" and "Model Prediction") sharing a date axis."""
    if not points:
        raise ValueError("nothing to plot")
    days = [d.toordinal() for d, _, _ in points]
    values = [v for _, g, p in points for v in (g, p)]
    x0, x1 = min(days), max(days)
    y0, y1 = min(values), max(values)
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(day):
        return MARGIN_L + (pw * (day - x0) / (x1 - x0) if x1 != x0 else pw / 2)

    def sy(v):
        return MARGIN_T + ph * (1.0 - (v - y0) / (y1 - y0))

    def poly(idx, color):
        pts = " ".join(f"{sx(d):.2f},{sy(p[idx]):.2f}" for d, p in zip(days, points))
        return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T + ph}" x2="{MARGIN_L + pw}" y2="{MARGIN_T + ph}" stroke="black"/>',
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{MARGIN_T + ph}" stroke="black"/>',
    ]
    for v in _ticks(y0, y1):
        y = sy(v)
        out.append(f'<line x1="{MARGIN_L - 4}" y1="{y:.2f}" x2="{MARGIN_L}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{y + 4:.2f}" text-anchor="end">{v:.2f}</text>')
    for day in sorted({days[0], days[len(days) // 2], days[-1]}):
        x = sx(day)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_T + ph}" x2="{x:.2f}" y2="{MARGIN_T + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN_T + ph + 18}" text-anchor="middle">'
                   f'{date.fromordinal(day).isoformat()}</text>')
    out.append(f'<text x="16" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.1f})">{escape(y_label)}</text>')
    out.append(poly(1, GT_COLOR))
    out.append(poly(2, PRED_COLOR))
    lx = MARGIN_L + pw - 150
    for k, (label, color) in enumerate((("GT", GT_COLOR), ("Model Prediction", PRED_COLOR))):
        y = MARGIN_T + 8 + 16 * k
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 24}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 30}" y="{y + 4}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_station_plots(series: dict[int, Sequence[tuple[date, float, float]]], out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for station in sorted(series):
        p = out / f"station_{station}.svg"
        p.write_text(line_chart(series[station], f"Station {station}"), encoding="utf-8")
        paths.append(p)
    return paths
