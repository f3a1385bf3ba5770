"""Self-contained SVG of exponent curves mu against 1/p.

Axes: x = 1/p on [0, 1/2], y = mu on a range fitted to the data (ticks every
0.1).  Predicted curves are polylines, measured slopes are filled circles in
the colour of their curve; the legend lists one entry per (family, n).
"""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

W, H = 640, 420
MARGIN = dict(left=60, right=200, top=30, bottom=50)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f")


def _f(x: float) -> str:
    return f"{x:.3f}"


def exponent_svg(series: list[dict], title: str = "growth exponent against 1/p") -> str:
    """``series`` items: {label, curve: [(1/p, mu)], points: [(1/p, mu)]}."""
    ys = [y for s in series for _, y in s["curve"] + s["points"] if math.isfinite(y)]
    lo = math.floor(min(ys + [0.0]) * 10) / 10
    hi = math.ceil(max(ys + [0.5]) * 10) / 10
    if hi - lo < 0.1:
        hi = lo + 0.1
    x0, x1 = MARGIN["left"], W - MARGIN["right"]
    y0, y1 = H - MARGIN["bottom"], MARGIN["top"]

    def X(t):
        return x0 + (x1 - x0) * t / 0.5

    def Y(m):
        return y0 + (y1 - y0) * (m - lo) / (hi - lo)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<text x="{_f((x0 + x1) / 2)}" y="18" font-size="13" text-anchor="middle">{escape(title)}</text>',
           f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
           f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>']
    for i in range(6):
        t = 0.1 * i
        out.append(f'<line x1="{_f(X(t))}" y1="{y0}" x2="{_f(X(t))}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(X(t))}" y="{y0 + 18}" font-size="11" text-anchor="middle">{t:.1f}</text>')
    k = 0
    while lo + 0.1 * k <= hi + 1e-9:
        m = lo + 0.1 * k
        out.append(f'<line x1="{x0 - 5}" y1="{_f(Y(m))}" x2="{x0}" y2="{_f(Y(m))}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{_f(Y(m) + 4)}" font-size="11" text-anchor="end">{m:.1f}</text>')
        k += 1
    out.append(f'<text x="{_f((x0 + x1) / 2)}" y="{H - 12}" font-size="12" text-anchor="middle">1/p</text>')
    out.append(f'<text x="16" y="{_f((y0 + y1) / 2)}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {_f((y0 + y1) / 2)})">mu</text>')
    for i, s in enumerate(series):
        col = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_f(X(t))},{_f(Y(m))}" for t, m in s["curve"] if math.isfinite(m))
        if pts:
            out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        for t, m in s["points"]:
            if math.isfinite(m):
                out.append(f'<circle cx="{_f(X(t))}" cy="{_f(Y(m))}" r="3.5" fill="{col}"/>')
        ly = MARGIN["top"] + 16 * i + 10
        out.append(f'<line x1="{x1 + 12}" y1="{ly}" x2="{x1 + 32}" y2="{ly}" stroke="{col}" stroke-width="2"/>')
        out.append(f'<text x="{x1 + 38}" y="{ly + 4}" font-size="11">{escape(s["label"])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
