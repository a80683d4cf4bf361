"""Minimal deterministic SVG plotting (polyline + annotations, no deps).

Output is plain text with fixed float formatting and no timestamps, so
identical inputs produce byte-identical files, which the test suite relies
on for regression diffing.
"""
from __future__ import annotations

import math

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 24, 36, 48


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s for s in (mag, 2 * mag, 2.5 * mag, 5 * mag, 10 * mag) if s >= raw)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def polyline_figure(path, xs, ys, xlabel: str = "", ylabel: str = "",
                    title: str = "", hline: float | None = None,
                    marks: list | None = None,
                    meta: list[str] | None = None) -> None:
    """Write one polyline with axes; optional horizontal level and point marks."""
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    if not xs or len(xs) != len(ys):
        raise ValueError("polyline needs matching nonempty coordinate lists")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if hline is not None:
        y_lo, y_hi = min(y_lo, hline), max(y_hi, hline)
    for m in marks or []:
        x_lo, x_hi = min(x_lo, m[0]), max(x_hi, m[0])
        y_lo, y_hi = min(y_lo, m[1]), max(y_hi, m[1])
    pad_x = 0.05 * (x_hi - x_lo) or 1.0
    pad_y = 0.05 * (y_hi - y_lo) or 1.0
    x_lo, x_hi = x_lo - pad_x, x_hi + pad_x
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    def px(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R)

    def py(y: float) -> float:
        return HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">']
    for line in meta or []:
        out.append(f"<!-- {str(line).replace('--', '- -')} -->")
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
        f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" stroke="black"/>')
    for t in _ticks(x_lo, x_hi):
        u = px(t)
        out.append(f'<line x1="{_fmt(u)}" y1="{HEIGHT - MARGIN_B}" x2="{_fmt(u)}" '
                   f'y2="{HEIGHT - MARGIN_B + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(u)}" y="{HEIGHT - MARGIN_B + 18}" font-size="11" '
                   f'text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        u = py(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{_fmt(u)}" x2="{MARGIN_L}" '
                   f'y2="{_fmt(u)}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{_fmt(u + 4)}" font-size="11" '
                   f'text-anchor="end">{_fmt(t)}</text>')
    if title:
        out.append(f'<text x="{WIDTH // 2}" y="{MARGIN_T - 12}" font-size="13" '
                   f'text-anchor="middle">{title}</text>')
    if xlabel:
        out.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 10}" font-size="12" '
                   f'text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{HEIGHT // 2}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 16 {HEIGHT // 2})">{ylabel}</text>')
    if hline is not None:
        out.append(f'<line x1="{MARGIN_L}" y1="{_fmt(py(hline))}" '
                   f'x2="{WIDTH - MARGIN_R}" y2="{_fmt(py(hline))}" '
                   f'stroke="gray" stroke-dasharray="6 4"/>')
        out.append(f'<text x="{WIDTH - MARGIN_R - 4}" y="{_fmt(py(hline) - 5)}" '
                   f'font-size="11" text-anchor="end" fill="gray">level {_fmt(hline)}</text>')
    pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
    out.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
    for m in marks or []:
        mx, my = px(m[0]), py(m[1])
        out.append(f'<circle cx="{_fmt(mx)}" cy="{_fmt(my)}" r="4" fill="crimson"/>')
        if len(m) > 2 and m[2]:
            out.append(f'<text x="{_fmt(mx + 7)}" y="{_fmt(my - 7)}" font-size="11" '
                       f'fill="crimson">{m[2]}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
