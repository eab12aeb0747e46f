"""Box-plot statistics and small hand-written SVG charts.

Coordinates are printed with two decimals so the same input always yields
the same bytes.
"""

from __future__ import annotations

from html import escape

import numpy as np

WIDTH = 480
HEIGHT = 320
MARGIN = 50


def box_stats(values) -> dict:
    """Quartiles (linear interpolation) and Tukey whiskers at 1.5 x IQR."""
    x = np.sort(np.asarray([v for v in values if v is not None], dtype=float))
    if x.size == 0:
        return {"n": 0, "q1": None, "median": None, "q3": None,
                "whisker_low": None, "whisker_high": None, "outliers": []}
    q1, median, q3 = (float(v) for v in np.percentile(x, [25, 50, 75]))
    iqr = q3 - q1
    low_fence, high_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = x[(x >= low_fence) & (x <= high_fence)]
    return {
        "n": int(x.size),
        "q1": q1,
        "median": median,
        "q3": q3,
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "outliers": [float(v) for v in x[(x < low_fence) | (x > high_fence)]],
    }


def _f(v: float) -> str:
    return f"{v:.2f}"


class _Axis:
    def __init__(self, low: float, high: float):
        if high <= low:
            low, high = low - 0.5, high + 0.5
        pad = (high - low) * 0.05
        self.low, self.high = low - pad, high + pad

    def y(self, value: float) -> float:
        span = HEIGHT - 2 * MARGIN
        return HEIGHT - MARGIN - (value - self.low) / (self.high - self.low) * span

    def ticks(self) -> list[tuple[float, str]]:
        return [(v, f"{v:.2f}") for v in np.linspace(self.low, self.high, 5)]


def _frame(title: str, axis: _Axis) -> list[str]:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{_f(WIDTH / 2)}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
    ]
    for value, label in axis.ticks():
        y = _f(axis.y(value))
        parts.append(f'<line x1="{MARGIN - 4}" y1="{y}" x2="{MARGIN}" y2="{y}" stroke="black"/>')
        parts.append(f'<text x="{MARGIN - 6}" y="{y}" text-anchor="end" dy="4">{label}</text>')
    if axis.low < 0 < axis.high:
        y = _f(axis.y(0.0))
        parts.append(f'<line x1="{MARGIN}" y1="{y}" x2="{WIDTH - MARGIN}" y2="{y}" '
                     'stroke="gray" stroke-dasharray="4 3"/>')
    return parts


def _slots(count: int) -> tuple[list[float], float]:
    span = WIDTH - 2 * MARGIN
    step = span / max(count, 1)
    return [MARGIN + step * (i + 0.5) for i in range(count)], step


def box_plot_svg(title: str, boxes: list[tuple[str, dict]]) -> str:
    """One box per ``(label, box_stats)``; boxes with no data are labelled only."""
    filled = [s for _, s in boxes if s["n"]]
    extremes = [v for s in filled for v in (s["whisker_low"], s["whisker_high"], *s["outliers"])]
    axis = _Axis(min(extremes, default=0.0), max(extremes, default=1.0))
    parts = _frame(title, axis)
    centers, step = _slots(len(boxes))
    half = min(step * 0.3, 40)
    for (label, s), cx in zip(boxes, centers):
        parts.append(f'<text x="{_f(cx)}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{escape(label)}</text>')
        if not s["n"]:
            continue
        top, bottom = axis.y(s["q3"]), axis.y(s["q1"])
        parts.append(f'<line x1="{_f(cx)}" y1="{_f(axis.y(s["whisker_high"]))}" x2="{_f(cx)}" '
                     f'y2="{_f(top)}" stroke="black"/>')
        parts.append(f'<line x1="{_f(cx)}" y1="{_f(bottom)}" x2="{_f(cx)}" '
                     f'y2="{_f(axis.y(s["whisker_low"]))}" stroke="black"/>')
        for end in ("whisker_low", "whisker_high"):
            y = _f(axis.y(s[end]))
            parts.append(f'<line x1="{_f(cx - half / 2)}" y1="{y}" x2="{_f(cx + half / 2)}" y2="{y}" stroke="black"/>')
        parts.append(f'<rect x="{_f(cx - half)}" y="{_f(top)}" width="{_f(2 * half)}" '
                     f'height="{_f(bottom - top)}" fill="#9ecae1" stroke="black"/>')
        y = _f(axis.y(s["median"]))
        parts.append(f'<line x1="{_f(cx - half)}" y1="{y}" x2="{_f(cx + half)}" y2="{y}" '
                     'stroke="black" stroke-width="2"/>')
        for v in s["outliers"]:
            parts.append(f'<circle cx="{_f(cx)}" cy="{_f(axis.y(v))}" r="3" fill="none" stroke="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart_svg(title: str, bars: list[tuple[str, float | None]]) -> str:
    values = [v for _, v in bars if v is not None]
    axis = _Axis(min(0.0, *values) if values else 0.0, max(1.0, *values) if values else 1.0)
    parts = _frame(title, axis)
    centers, step = _slots(len(bars))
    half = min(step * 0.35, 40)
    base = axis.y(0.0)
    for (label, v), cx in zip(bars, centers):
        parts.append(f'<text x="{_f(cx)}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{escape(label)}</text>')
        if v is None:
            continue
        y = axis.y(v)
        parts.append(f'<rect x="{_f(cx - half)}" y="{_f(min(y, base))}" width="{_f(2 * half)}" '
                     f'height="{_f(abs(base - y))}" fill="#fdae6b" stroke="black"/>')
        parts.append(f'<text x="{_f(cx)}" y="{_f(min(y, base) - 4)}" text-anchor="middle">{v:.3f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
