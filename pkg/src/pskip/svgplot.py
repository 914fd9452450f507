"""Minimal deterministic SVG line charts.

Written directly (no plotting dependency) so identical inputs produce
byte-identical files; nothing time- or environment-dependent is embedded.
"""

from __future__ import annotations

import math

__all__ = ["render_lines"]

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#17becf", "#7f7f7f"]

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 72, 16, 20, 56  # margins


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _log_ticks(lo: float, hi: float) -> list:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    step = max(1, (hi_e - lo_e) // 8)
    return [10.0**e for e in range(lo_e, hi_e + 1, step)]


def _lin_ticks(lo: float, hi: float, count: int = 5) -> list:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / (count - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * step:
        ticks.append(v)
        v += step
    return ticks or [lo]


def render_lines(series: list, xlabel: str, ylabel: str,
                 logy: bool = True) -> str:
    """SVG text for line series [(label, x array, y array), ...].

    With logy, non-positive y values are clipped to the smallest positive
    value present (the usual convergence-plot convention).
    """
    if not series:
        raise ValueError("no series to plot")
    eps = None
    for _, _, y in series:
        for v in y:
            if v > 0:
                eps = v if eps is None else min(eps, v)
    if logy and eps is None:
        raise ValueError("log-scale plot needs at least one positive value")

    xs_all = [float(v) for _, x, _ in series for v in x]
    x_lo, x_hi = min(xs_all), max(xs_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def ytrans(v: float) -> float:
        return math.log10(max(v, eps)) if logy else v

    ys_all = [ytrans(float(v)) for _, _, y in series for v in y]
    y_lo, y_hi = min(ys_all), max(ys_all)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def px(v: float) -> float:
        return _ML + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v: float) -> float:
        return _MT + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" '
        'stroke="#333" stroke-width="1"/>',
    ]

    if logy:
        ticks = _log_ticks(10.0**y_lo, 10.0**y_hi)
        tick_pairs = [(math.log10(t), f"1e{int(math.log10(t))}") for t in ticks]
    else:
        ticks = _lin_ticks(y_lo, y_hi)
        tick_pairs = [(t, _fmt(t)) for t in ticks]
    for tv, label in tick_pairs:
        if not (y_lo - 1e-9 <= tv <= y_hi + 1e-9):
            continue
        y = py(tv)
        out.append(f'<line x1="{_ML - 4}" y1="{y:.2f}" x2="{_ML}" '
                   f'y2="{y:.2f}" stroke="#333"/>')
        out.append(f'<text x="{_ML - 8}" y="{y + 4:.2f}" font-size="11" '
                   f'text-anchor="end" font-family="sans-serif">{label}</text>')

    for tv in _lin_ticks(x_lo, x_hi):
        x = px(tv)
        out.append(f'<line x1="{x:.2f}" y1="{_MT + ph}" x2="{x:.2f}" '
                   f'y2="{_MT + ph + 4}" stroke="#333"/>')
        out.append(f'<text x="{x:.2f}" y="{_MT + ph + 18}" font-size="11" '
                   f'text-anchor="middle" font-family="sans-serif">'
                   f'{_fmt(tv)}</text>')

    out.append(f'<text x="{_ML + pw / 2:.2f}" y="{_H - 16}" font-size="13" '
               f'text-anchor="middle" font-family="sans-serif">{xlabel}</text>')
    out.append(f'<text x="18" y="{_MT + ph / 2:.2f}" font-size="13" '
               f'text-anchor="middle" font-family="sans-serif" '
               f'transform="rotate(-90 18 {_MT + ph / 2:.2f})">{ylabel}</text>')

    for k, (label, x, y) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(f"{px(float(a)):.2f},{py(ytrans(float(b))):.2f}"
                       for a, b in zip(x, y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   'stroke-width="1.5"/>')
        ly = _MT + 16 + 16 * k
        out.append(f'<line x1="{_ML + pw - 150}" y1="{ly - 4}" '
                   f'x2="{_ML + pw - 126}" y2="{ly - 4}" stroke="{color}" '
                   'stroke-width="2"/>')
        out.append(f'<text x="{_ML + pw - 120}" y="{ly}" font-size="11" '
                   f'font-family="sans-serif">{label}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"
