"""Minimal standalone SVG line charts.

Plots are a convenience view only; every chart the CLI writes has a CSV
twin carrying the same numbers, which is the artifact of record.
"""

from __future__ import annotations

import math

_COLORS = ["#1f6fb2", "#c23b22", "#2e8540", "#714a7", "#b8860b", "#11777d"]
_W, _H = 720, 480
_ML, _MR, _MT, _MB = 72, 24, 40, 56


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def write_line_chart(path, series, title: str = "", xlabel: str = "",
                     ylabel: str = "", logx: bool = False, logy: bool = False):
    """Write a line chart; `series` is a list of (label, xs, ys)."""

    def tx(v):
        return math.log10(v) if logx else v

    def ty(v):
        return math.log10(v) if logy else v

    pts = [(tx(x), ty(y)) for _, xs, ys in series for x, y in zip(xs, ys)
           if _finite(x, y, logx, logy)]
    if not pts:
        raise ValueError("nothing to plot")
    xlo = min(p[0] for p in pts)
    xhi = max(p[0] for p in pts)
    ylo = min(p[1] for p in pts)
    yhi = max(p[1] for p in pts)
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    pad = 0.04 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad

    def px(v):
        return _ML + (v - xlo) / (xhi - xlo) * (_W - _ML - _MR)

    def py(v):
        return _H - _MB - (v - ylo) / (yhi - ylo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    for t in _ticks(xlo, xhi):
        x = px(t)
        label = _fmt(10.0 ** t) if logx else _fmt(t)
        parts.append(f'<line x1="{x:.1f}" y1="{_MT}" x2="{x:.1f}" y2="{_H-_MB}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{x:.1f}" y="{_H-_MB+18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{label}</text>')
    for t in _ticks(ylo, yhi):
        y = py(t)
        label = _fmt(10.0 ** t) if logy else _fmt(t)
        parts.append(f'<line x1="{_ML}" y1="{y:.1f}" x2="{_W-_MR}" y2="{y:.1f}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{_ML-6}" y="{y+4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{label}</text>')
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" '
                 f'height="{_H-_MT-_MB}" fill="none" stroke="#333333"/>')
    parts.append(f'<text x="{_W/2:.1f}" y="{_H-12}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">{xlabel}</text>')
    parts.append(f'<text x="18" y="{_H/2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 18 {_H/2:.1f})">{ylabel}</text>')
    for i, (label, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        coords = [(px(tx(x)), py(ty(y))) for x, y in zip(xs, ys)
                  if _finite(x, y, logx, logy)]
        if not coords:
            continue
        d = " ".join(f"{x:.2f},{y:.2f}" for x, y in coords)
        parts.append(f'<polyline points="{d}" fill="none" stroke="{color}" '
                     f'stroke-width="1.6"/>')
        ly = _MT + 16 + 16 * i
        parts.append(f'<line x1="{_W-_MR-150}" y1="{ly-4}" x2="{_W-_MR-126}" '
                     f'y2="{ly-4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_W-_MR-120}" y="{ly}" font-family="sans-serif" '
                     f'font-size="11">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))


def _finite(x, y, logx, logy) -> bool:
    if not (math.isfinite(x) and math.isfinite(y)):
        return False
    if logx and x <= 0:
        return False
    if logy and y <= 0:
        return False
    return True
