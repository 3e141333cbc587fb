"""Minimal hand-rolled SVG line plots.

Keeps the artifact free of plotting-stack dependencies. Output is a fixed
800x420 canvas with linear axes, tick labels, solid polylines per series, and
dashed horizontal lines for constraint bounds. Only the CSV/JSON outputs of
the package carry a bit-exactness contract; these plots are for eyes.
"""

from __future__ import annotations

import math

import numpy as np

_W, _H = 800, 420
_ML, _MR, _MT, _MB = 70, 20, 40, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if raw <= m * mag:
            step = m * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * step:
        out.append(round(t, 12))
        t += step
    return out


def _fmt_tick(v: float) -> str:
    if v == int(v) and abs(v) < 1e6:
        return str(int(v))
    return f"{v:g}"


def plot_lines(
    path,
    series,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    hlines=(),
) -> None:
    """Write an SVG line plot.

    ``series`` is a list of ``(label, x, y)`` triples; ``hlines`` a list of
    ``(value, label)`` pairs drawn as dashed bound lines.
    """
    series = [(lbl, np.asarray(x, float), np.asarray(y, float)) for lbl, x, y in series]
    xs = np.concatenate([x for _, x, _ in series]) if series else np.array([0.0, 1.0])
    ys_list = [y for _, _, y in series] + [np.asarray([v]) for v, _ in hlines]
    ys = np.concatenate(ys_list) if ys_list else np.array([0.0, 1.0])
    x_lo, x_hi = float(np.min(xs)), float(np.max(xs))
    y_lo, y_hi = float(np.min(ys)), float(np.max(ys))
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    pad = 0.05 * (y_hi - y_lo) or 1.0
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return _ML + (v - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(v):
        return _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2:.1f}" y="22" text-anchor="middle" font-size="15">{title}</text>',
    ]
    # axes
    out.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    for t in _ticks(x_lo, x_hi):
        out.append(
            f'<line x1="{sx(t):.1f}" y1="{_H-_MB}" x2="{sx(t):.1f}" y2="{_H-_MB+5}" stroke="black"/>'
        )
        out.append(
            f'<text x="{sx(t):.1f}" y="{_H-_MB+18}" text-anchor="middle">{_fmt_tick(t)}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        out.append(
            f'<line x1="{_ML-5}" y1="{sy(t):.1f}" x2="{_ML}" y2="{sy(t):.1f}" stroke="black"/>'
        )
        out.append(
            f'<text x="{_ML-8}" y="{sy(t)+4:.1f}" text-anchor="end">{_fmt_tick(t)}</text>'
        )
    out.append(
        f'<text x="{_W/2:.1f}" y="{_H-12}" text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="18" y="{_H/2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {_H/2:.1f})">{ylabel}</text>'
    )
    for value, label in hlines:
        y = sy(value)
        out.append(
            f'<line x1="{_ML}" y1="{y:.1f}" x2="{_W-_MR}" y2="{y:.1f}" '
            'stroke="#d62728" stroke-dasharray="6,4" stroke-width="1"/>'
        )
        if label:
            out.append(f'<text x="{_W-_MR-4}" y="{y-4:.1f}" text-anchor="end" fill="#d62728">{label}</text>')
    for idx, (label, x, y) in enumerate(series):
        color = _COLORS[idx % len(_COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(
            f'<text x="{_ML+8}" y="{_MT+16+14*idx}" fill="{color}">{label}</text>'
        )
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
