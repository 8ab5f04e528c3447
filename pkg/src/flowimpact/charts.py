"""Deterministic SVG grouped bar charts.

Output is plain text with fixed coordinate formatting and a fixed palette,
so identical inputs always produce byte-identical files (suitable for
golden-file tests). No plotting library is involved.
"""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

WIDTH = 800
HEIGHT = 400
MARGIN_LEFT = 64.0
MARGIN_RIGHT = 16.0
MARGIN_TOP = 40.0
MARGIN_BOTTOM = 72.0

PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860")

AXIS_STYLE = 'stroke="#333333" stroke-width="1"'
GRID_STYLE = 'stroke="#dddddd" stroke-width="1"'
TEXT_STYLE = 'font-family="sans-serif" font-size="12" fill="#333333"'


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def grouped_bar_chart(
    title: str,
    groups: Sequence[tuple[str, Sequence[tuple[str, float]]]],
    y_min: float,
    y_max: float,
) -> str:
    """Render groups of (label, [(series label, value), ...]) as an SVG string.

    Bars are clipped to [y_min, y_max]; values below zero (when y_min < 0)
    hang from the zero line. Series colors are assigned by first appearance.
    """
    if y_max <= y_min:
        raise ValueError("y_max must exceed y_min")
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def y_px(v: float) -> float:
        v = min(max(v, y_min), y_max)
        return MARGIN_TOP + (y_max - v) / (y_max - y_min) * plot_h

    parts: list[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{_fmt(WIDTH / 2)}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14" fill="#333333">'
        f"{escape(title)}</text>",
    ]
    # Horizontal grid lines and y tick labels at 5 even steps.
    for k in range(5):
        v = y_min + (y_max - y_min) * k / 4
        y = y_px(v)
        parts.append(
            f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(y)}" '
            f'x2="{_fmt(WIDTH - MARGIN_RIGHT)}" y2="{_fmt(y)}" {GRID_STYLE}/>'
        )
        parts.append(
            f'<text x="{_fmt(MARGIN_LEFT - 8)}" y="{_fmt(y + 4)}" '
            f'text-anchor="end" {TEXT_STYLE}>{v:g}</text>'
        )
    # Axes.
    parts.append(
        f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(MARGIN_TOP)}" '
        f'x2="{_fmt(MARGIN_LEFT)}" y2="{_fmt(MARGIN_TOP + plot_h)}" {AXIS_STYLE}/>'
    )
    baseline = y_px(0.0) if y_min < 0.0 < y_max else MARGIN_TOP + plot_h
    parts.append(
        f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(baseline)}" '
        f'x2="{_fmt(WIDTH - MARGIN_RIGHT)}" y2="{_fmt(baseline)}" {AXIS_STYLE}/>'
    )

    series_colors: dict[str, str] = {}
    if groups:
        group_w = plot_w / len(groups)
        for gi, (label, bars) in enumerate(groups):
            gx = MARGIN_LEFT + gi * group_w
            parts.append(
                f'<text x="{_fmt(gx + group_w / 2)}" y="{_fmt(MARGIN_TOP + plot_h + 18)}" '
                f'text-anchor="middle" {TEXT_STYLE}>{escape(label)}</text>'
            )
            if not bars:
                continue
            slot = group_w / (len(bars) + 1)
            bar_w = slot * 0.8
            for bi, (series, value) in enumerate(bars):
                if series not in series_colors:
                    series_colors[series] = PALETTE[len(series_colors) % len(PALETTE)]
                x = gx + slot * (bi + 1) - bar_w / 2
                top = y_px(max(value, 0.0))
                bottom = y_px(min(value, 0.0))
                parts.append(
                    f'<rect x="{_fmt(x)}" y="{_fmt(top)}" width="{_fmt(bar_w)}" '
                    f'height="{_fmt(max(bottom - top, 0.0))}" '
                    f'fill="{series_colors[series]}"/>'
                )
    # Legend, one swatch per series in first-seen order.
    lx = MARGIN_LEFT
    ly = HEIGHT - 24.0
    for series, color in series_colors.items():
        parts.append(
            f'<rect x="{_fmt(lx)}" y="{_fmt(ly - 10)}" width="12" height="12" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_fmt(lx + 16)}" y="{_fmt(ly)}" {TEXT_STYLE}>'
            f'{escape(series)}</text>'
        )
        lx += 16 + 8 * len(series) + 24
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
