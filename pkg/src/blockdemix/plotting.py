"""Minimal deterministic SVG line charts (no timestamps, no random ids)."""

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 20, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
MARKERS = ("circle", "square", "diamond", "triangle")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo, hi, count=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _marker(kind, x, y, color):
    if kind == "circle":
        return f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3.5" fill="{color}"/>'
    if kind == "square":
        return (f'<rect x="{_fmt(x - 3.5)}" y="{_fmt(y - 3.5)}" width="7" height="7" '
                f'fill="{color}"/>')
    if kind == "diamond":
        pts = f"{_fmt(x)},{_fmt(y - 4.5)} {_fmt(x + 4.5)},{_fmt(y)} {_fmt(x)},{_fmt(y + 4.5)} {_fmt(x - 4.5)},{_fmt(y)}"
    else:
        pts = f"{_fmt(x)},{_fmt(y - 4.5)} {_fmt(x + 4.5)},{_fmt(y + 4)} {_fmt(x - 4.5)},{_fmt(y + 4)}"
    return f'<polygon points="{pts}" fill="{color}"/>'


def line_chart(series: dict, xlabel: str, ylabel: str, ylim=None, log_y=False) -> str:
    """One polyline per entry of ``series`` (name -> {x: y}), with legend and axes."""
    pts = {name: sorted(data.items()) for name, data in series.items()}
    xs = [x for p in pts.values() for x, _ in p]
    if not xs:
        raise ValueError("nothing to plot")

    def ty(v):
        return math.log10(max(v, 1e-16)) if log_y else v

    ys = [ty(y) for p in pts.values() for _, y in p]
    x0, x1 = min(xs), max(xs)
    if ylim is not None:
        y0, y1 = ylim
    else:
        y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
        if y1 == y0:
            y1 = y0 + 1
    if x1 == x0:
        x1 = x0 + 1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (1 - (ty(y) - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for xv in _ticks(x0, x1):
        X = px(xv)
        out.append(f'<line x1="{_fmt(X)}" y1="{TOP + ph}" x2="{_fmt(X)}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(X)}" y="{TOP + ph + 18}" text-anchor="middle">{xv:.0f}</text>')
    for yv in _ticks(y0, y1):
        Y = TOP + (1 - (yv - y0) / (y1 - y0)) * ph
        label = f"1e{yv:.0f}" if log_y else f"{yv:.2f}"
        out.append(f'<line x1="{LEFT - 5}" y1="{_fmt(Y)}" x2="{LEFT}" y2="{_fmt(Y)}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_fmt(Y + 4)}" text-anchor="end">{label}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">{escape(ylabel)}</text>')
    for i, (name, p) in enumerate(pts.items()):
        color = COLORS[i % len(COLORS)]
        marker = MARKERS[i % len(MARKERS)]
        coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in p)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
        out.extend(_marker(marker, px(x), py(y), color) for x, y in p)
        ly = TOP + 14 + 18 * i
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(_marker(marker, lx + 10, ly - 4, color))
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
