"""Minimal SVG line charts (no plotting library needed)."""
from __future__ import annotations

from html import escape
from pathlib import Path
from typing import Sequence

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
W, H = 640, 400
PAD_L, PAD_R, PAD_T, PAD_B = 70, 160, 30, 50


def _fmt(v: float) -> str:
    return f"{v:.3g}"


def line_chart(series: dict[str, tuple[Sequence[float], Sequence[float]]], title: str,
               xlabel: str, ylabel: str) -> str:
    xs = [x for sx, _ in series.values() for x in sx]
    ys = [y for _, sy in series.values() for y in sy]
    if not xs:
        raise ValueError("nothing to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    pw, ph = W - PAD_L - PAD_R, H - PAD_T - PAD_B

    def px(x):
        return PAD_L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return PAD_T + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.0f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        out.append(f'<text x="{px(xv):.1f}" y="{H - PAD_B + 15}" text-anchor="middle">{_fmt(xv)}</text>')
        out.append(f'<text x="{PAD_L - 5}" y="{py(yv) + 4:.1f}" text-anchor="end">{_fmt(yv)}</text>')
    out.append(f'<text x="{PAD_L + pw / 2:.0f}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{PAD_T + ph / 2:.0f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {PAD_T + ph / 2:.0f})">{escape(ylabel)}</text>')
    for n, (label, (sx, sy)) in enumerate(series.items()):
        colour = PALETTE[n % len(PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(sx, sy))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = PAD_T + 15 + 16 * n
        out.append(f'<line x1="{W - PAD_R + 10}" y1="{ly - 4}" x2="{W - PAD_R + 30}" y2="{ly - 4}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{W - PAD_R + 35}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_chart(path: Path, *args, **kwargs) -> None:
    Path(path).write_text(line_chart(*args, **kwargs))
