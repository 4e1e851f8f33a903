"""Minimal deterministic SVG charts (axes, polyline/points, labels)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

WIDTH, HEIGHT = 800, 500
MARGIN = 60

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _scale(values: Sequence[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    return lo, hi


def _x_px(x: float, lo: float, hi: float) -> float:
    return MARGIN + (x - lo) / (hi - lo) * (WIDTH - 2 * MARGIN)


def _y_px(y: float, lo: float, hi: float) -> float:
    return HEIGHT - MARGIN - (y - lo) / (hi - lo) * (HEIGHT - 2 * MARGIN)


def _header(title: str, x_label: str, y_label: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">{x_label}</text>',
        f'<text x="16" y="{HEIGHT / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {HEIGHT / 2:.1f})">{y_label}</text>',
    ]


def _axis_ticks(x_range, y_range) -> list[str]:
    parts = []
    for frac in (0.0, 0.5, 1.0):
        xv = x_range[0] + frac * (x_range[1] - x_range[0])
        yv = y_range[0] + frac * (y_range[1] - y_range[0])
        parts.append(
            f'<text x="{_x_px(xv, *x_range):.1f}" y="{HEIGHT - MARGIN + 18}" '
            f'text-anchor="middle" font-size="10">{xv:.4g}</text>'
        )
        parts.append(
            f'<text x="{MARGIN - 8}" y="{_y_px(yv, *y_range):.1f}" '
            f'text-anchor="end" font-size="10">{yv:.4g}</text>'
        )
    return parts


def line_chart(
    points: Sequence[tuple[float, float]],
    path: str | Path,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    fit: tuple[float, float, float] | None = None,
) -> None:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_range = _scale(xs)
    y_all = list(ys)
    if fit is not None:
        a, b, c = fit
        y_all += [a * x * x + b * x + c for x in xs]
    y_range = _scale(y_all)
    parts = _header(title, x_label, y_label) + _axis_ticks(x_range, y_range)
    poly = " ".join(f"{_x_px(x, *x_range):.2f},{_y_px(y, *y_range):.2f}" for x, y in points)
    parts.append(f'<polyline points="{poly}" fill="none" stroke="{_PALETTE[0]}" stroke-width="2"/>')
    for x, y in points:
        parts.append(
            f'<circle cx="{_x_px(x, *x_range):.2f}" cy="{_y_px(y, *y_range):.2f}" r="3" fill="{_PALETTE[0]}"/>'
        )
    if fit is not None:
        a, b, c = fit
        fit_pts = " ".join(
            f"{_x_px(x, *x_range):.2f},{_y_px(a * x * x + b * x + c, *y_range):.2f}" for x in sorted(xs)
        )
        parts.append(
            f'<polyline points="{fit_pts}" fill="none" stroke="{_PALETTE[1]}" '
            f'stroke-width="1.5" stroke-dasharray="6,4"/>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def scatter_chart(
    points: Sequence[tuple[float, float, int]],
    path: str | Path,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
) -> None:
    """Points are (x, y, group); groups pick marker colors."""
    x_range = _scale([p[0] for p in points])
    y_range = _scale([p[1] for p in points])
    parts = _header(title, x_label, y_label) + _axis_ticks(x_range, y_range)
    for x, y, group in points:
        color = _PALETTE[group % len(_PALETTE)]
        parts.append(
            f'<circle cx="{_x_px(x, *x_range):.2f}" cy="{_y_px(y, *y_range):.2f}" r="4" '
            f'fill="{color}" fill-opacity="0.7"/>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def bar_chart(
    labeled_values: Sequence[tuple[str, float]],
    path: str | Path,
    title: str = "",
    x_label: str = "value",
) -> None:
    """Horizontal bars, e.g. for distinctiveness scores."""
    n = len(labeled_values)
    values = [v for _, v in labeled_values]
    v_range = _scale(values + [0.0])
    row_h = (HEIGHT - 2 * MARGIN) / max(n, 1)
    parts = _header(title, x_label, "")
    zero_px = _x_px(0.0, *v_range)
    for i, (label, value) in enumerate(labeled_values):
        y0 = MARGIN + i * row_h
        x1 = _x_px(value, *v_range)
        left, width = (min(zero_px, x1), abs(x1 - zero_px))
        color = _PALETTE[0] if value >= 0 else _PALETTE[1]
        parts.append(
            f'<rect x="{left:.2f}" y="{y0 + 2:.2f}" width="{width:.2f}" '
            f'height="{max(row_h - 4, 1):.2f}" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{MARGIN - 6}" y="{y0 + row_h / 2 + 4:.2f}" text-anchor="end" '
            f'font-size="10">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
