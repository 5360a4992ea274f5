"""Minimal deterministic SVG line charts.

Hand-rolled on purpose: output is plain text with fixed formatting, so two
runs over the same data produce byte-identical (and diffable) files.
"""

from __future__ import annotations

from pathlib import Path

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
SPAN_COLORS = ("#aec7e8", "#ffbb78", "#98df8a", "#ff9896")

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 60, 20, 34, 44


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        hi = lo + 1.0
    return [lo + i * (hi - lo) / (n - 1) for i in range(n)]


def line_chart(
    series: list[tuple[str, list[float], list[float]]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    spans: list[tuple[float, float, str]] = (),
) -> str:
    """Render labelled (xs, ys) polylines; spans are shaded x-intervals."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if not xs_all:
        raise ValueError("nothing to plot")
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    y_pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def px(x: float) -> float:
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(y: float) -> float:
        return _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    for i, (x0, x1, label) in enumerate(spans):
        color = SPAN_COLORS[i % len(SPAN_COLORS)]
        out.append(
            f'<rect x="{px(x0):.2f}" y="{_MT}" width="{px(x1) - px(x0):.2f}" '
            f'height="{_H - _MT - _MB}" fill="{color}" fill-opacity="0.35"/>'
        )
        out.append(
            f'<text x="{(px(x0) + px(x1)) / 2:.2f}" y="{_MT + 12}" '
            f'text-anchor="middle" fill="#555">{label}</text>'
        )
    out.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" '
        f'height="{_H - _MT - _MB}" fill="none" stroke="#333"/>'
    )
    for tx in _ticks(x_lo, x_hi):
        out.append(
            f'<text x="{px(tx):.2f}" y="{_H - _MB + 16}" text-anchor="middle">{tx:.4g}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        out.append(
            f'<text x="{_ML - 6}" y="{py(ty):.2f}" text-anchor="end" '
            f'dominant-baseline="middle">{ty:.4g}</text>'
        )
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(
            f'<text x="{_W - _MR - 6}" y="{_MT + 16 + 14 * i}" text-anchor="end" '
            f'fill="{color}">{label}</text>'
        )
    if title:
        out.append(f'<text x="{_W / 2:.0f}" y="{_MT - 12}" text-anchor="middle" font-size="13">{title}</text>')
    if x_label:
        out.append(f'<text x="{_W / 2:.0f}" y="{_H - 8}" text-anchor="middle">{x_label}</text>')
    if y_label:
        out.append(
            f'<text x="14" y="{_H / 2:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {_H / 2:.0f})">{y_label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path: str | Path, svg_text: str) -> None:
    Path(path).write_text(svg_text, encoding="utf-8")
