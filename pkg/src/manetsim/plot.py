"""Line plots of a sweep's aggregate CSV, written as plain SVG text.

One polyline per protocol, swept value on x, metric mean on y, with a thin
whisker of one sample standard deviation where more than one seed ran.
Output depends only on the CSV bytes.
"""

from __future__ import annotations

import csv
import math
from xml.sax.saxutils import escape

# metric name -> (aggregate column stem, axis label)
PLOT_METRICS = {
    "pdr": ("PDR", "Packet delivery fraction"),
    "delay": ("delay_s", "Avg. end-to-end delay (s)"),
    "roh": ("R", "Routing overhead (packets)"),
    "throughput": ("throughput_bps", "Throughput (bit/s)"),
}
PARAM_LABELS = {
    "n_nodes": "Number of nodes",
    "speed_max": "Max speed (m/s)",
    "speed_min": "Min speed (m/s)",
    "pause": "Pause time (s)",
    "rate": "Packet rate (pkt/s)",
    "duration": "Duration (s)",
    "radio_range": "Radio range (m)",
}
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 30, 60


class PlotError(ValueError):
    pass


def _num(s: str):
    return None if s in ("", "NA") else float(s)


def load_series(path, metric: str):
    """``(param, {protocol: [(x, mean, std), ...]})`` sorted by x."""
    if metric not in PLOT_METRICS:
        raise PlotError(f"unknown metric {metric!r}; valid: {', '.join(PLOT_METRICS)}")
    stem = PLOT_METRICS[metric][0]
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PlotError(f"{path}: empty CSV, nothing to plot")
    missing = {"param", "value", "protocol", stem + "_mean"} - set(rows[0])
    if missing:
        raise PlotError(f"{path}: missing columns {sorted(missing)}")
    series: dict[str, list] = {}
    for r in rows:
        mean = _num(r[stem + "_mean"])
        if mean is None:
            continue
        series.setdefault(r["protocol"], []).append(
            (float(r["value"]), mean, _num(r.get(stem + "_std", "NA")))
        )
    for pts in series.values():
        pts.sort()
    return rows[0]["param"], series


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + (abs(lo) or 1.0)
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 12))
        t += step
    if ticks[-1] < hi:
        ticks.append(round(t, 12))
    return ticks


def _g(v: float) -> str:
    return f"{v:.6g}"


def render_svg(param: str, series: dict, metric: str) -> str:
    if len(series) < 2:
        raise PlotError(f"need at least 2 protocols, got {len(series)}")
    xs = sorted({p[0] for pts in series.values() for p in pts})
    if len(xs) < 2:
        raise PlotError(f"need at least 2 sweep points, got {len(xs)}")
    ys = []
    for pts in series.values():
        for _, m, s in pts:
            ys += [m, m - (s or 0.0), m + (s or 0.0)]
    yticks = _nice_ticks(min(0.0, min(ys)), max(ys))
    y0, y1 = yticks[0], yticks[-1]
    x0, x1 = xs[0], xs[-1]
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    for x in xs:
        out.append(f'<line x1="{px(x):.2f}" y1="{TOP + ph}" x2="{px(x):.2f}" '
                   f'y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(x):.2f}" y="{TOP + ph + 20}" '
                   f'text-anchor="middle">{_g(x)}</text>')
    for y in yticks:
        out.append(f'<line x1="{LEFT - 5}" y1="{py(y):.2f}" x2="{LEFT + pw}" y2="{py(y):.2f}" '
                   f'stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 8}" y="{py(y) + 4:.2f}" text-anchor="end">{_g(y)}</text>')
    xlabel = escape(PARAM_LABELS.get(param, param))
    ylabel = escape(PLOT_METRICS[metric][1])
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{H - 15}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + ph / 2:.2f})">{ylabel}</text>')

    for i, (proto, pts) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(m):.2f}" for x, m, _ in pts)
        out.append(f'<polyline class="series" data-protocol="{escape(proto)}" fill="none" '
                   f'stroke="{color}" stroke-width="2" points="{coords}"/>')
        for x, m, s in pts:
            if s:
                out.append(f'<line class="whisker" x1="{px(x):.2f}" y1="{py(m - s):.2f}" '
                           f'x2="{px(x):.2f}" y2="{py(m + s):.2f}" stroke="{color}"/>')
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(m):.2f}" r="3" fill="{color}"/>')
        ly = TOP + 10 + 20 * i
        lx = LEFT + pw + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">{escape(proto)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot(csv_path, metric: str, out_path) -> str:
    """Write the SVG for ``metric`` from an aggregate CSV; returns ``out_path``."""
    param, series = load_series(csv_path, metric)
    svg = render_svg(param, series, metric)
    with open(out_path, "w") as fh:
        fh.write(svg)
    return out_path


__all__ = ["plot", "render_svg", "load_series", "PlotError", "PLOT_METRICS"]
