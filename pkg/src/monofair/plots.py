"""Static SVG scatter plots for sweep and convergence results."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterable, Sequence

WIDTH, HEIGHT = 800, 600
MARGIN = dict(left=80, right=170, top=50, bottom=70)

# series name -> (marker shape, colour)
STYLES = {
    "fnn": ("triangle", "#d4a017"),
    "fmnn": ("circle", "#c0392b"),
    "baseline": ("star", "#2e6fd0"),
}
_FALLBACK = [("square", "#2c3e50"), ("diamond", "#16a085"), ("triangle", "#8e44ad"), ("circle", "#7f8c8d")]


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks, t = [], start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _range(values: list[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 1.0
    lo, hi = min(values), max(values)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _marker(parent, shape: str, cx: float, cy: float, colour: str, title: str) -> None:
    r = 5.0
    attrs = {"class": "marker", "fill": colour, "fill-opacity": "0.75", "stroke": "#222", "stroke-width": "0.6"}
    if shape == "circle":
        el = ET.SubElement(parent, "circle", cx=f"{cx:.2f}", cy=f"{cy:.2f}", r=f"{r}", **attrs)
    else:
        if shape == "triangle":
            pts = [(cx, cy - r * 1.2), (cx - r, cy + r * 0.8), (cx + r, cy + r * 0.8)]
        elif shape == "diamond":
            pts = [(cx, cy - r * 1.2), (cx + r, cy), (cx, cy + r * 1.2), (cx - r, cy)]
        elif shape == "star":
            pts = []
            for k in range(10):
                rad = r * 1.3 if k % 2 == 0 else r * 0.55
                ang = -math.pi / 2 + k * math.pi / 5
                pts.append((cx + rad * math.cos(ang), cy + rad * math.sin(ang)))
        else:
            pts = [(cx - r, cy - r), (cx + r, cy - r), (cx + r, cy + r), (cx - r, cy + r)]
        el = ET.SubElement(parent, "polygon", points=" ".join(f"{x:.2f},{y:.2f}" for x, y in pts), **attrs)
    ET.SubElement(el, "title").text = title


def scatter_svg(
    path: str | Path,
    series: dict[str, Sequence[tuple[float, float]]],
    x_label: str,
    y_label: str,
    title: str = "",
    x_categories: Sequence[str] | None = None,
) -> int:
    """Write a scatter plot and return the number of markers drawn.

    Points with a missing or non-finite coordinate are dropped. When
    ``x_categories`` is given, x values are category indices.
    """
    clean = {
        name: [(float(x), float(y)) for x, y in pts if _finite(x) and _finite(y)]
        for name, pts in series.items()
    }
    xs = [x for pts in clean.values() for x, _ in pts]
    ys = [y for pts in clean.values() for _, y in pts]
    if x_categories is not None:
        x_lo, x_hi = -0.5, len(x_categories) - 0.5
    else:
        x_lo, x_hi = _range(xs)
    y_lo, y_hi = _range(ys)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return MARGIN["top"] + (1 - (y - y_lo) / (y_hi - y_lo)) * ph

    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        viewBox=f"0 0 {WIDTH} {HEIGHT}",
        width=str(WIDTH),
        height=str(HEIGHT),
    )
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    axes = ET.SubElement(svg, "g", {"class": "axes", "font-family": "sans-serif", "font-size": "12"})
    ET.SubElement(axes, "rect", x=str(MARGIN["left"]), y=str(MARGIN["top"]), width=str(pw), height=str(ph),
                  fill="none", stroke="#333")

    x_ticks = range(len(x_categories)) if x_categories is not None else _nice_ticks(x_lo, x_hi)
    for i, t in enumerate(x_ticks):
        X = sx(t)
        ET.SubElement(axes, "line", x1=f"{X:.2f}", x2=f"{X:.2f}", y1=str(MARGIN["top"] + ph),
                      y2=str(MARGIN["top"] + ph + 5), stroke="#333")
        label = x_categories[i] if x_categories is not None else f"{t:g}"
        ET.SubElement(axes, "text", x=f"{X:.2f}", y=str(MARGIN["top"] + ph + 20),
                      **{"text-anchor": "middle"}).text = label
    for t in _nice_ticks(y_lo, y_hi):
        Y = sy(t)
        ET.SubElement(axes, "line", x1=str(MARGIN["left"] - 5), x2=str(MARGIN["left"]), y1=f"{Y:.2f}",
                      y2=f"{Y:.2f}", stroke="#333")
        ET.SubElement(axes, "text", x=str(MARGIN["left"] - 8), y=f"{Y + 4:.2f}",
                      **{"text-anchor": "end"}).text = f"{t:g}"
    ET.SubElement(axes, "text", x=f"{MARGIN['left'] + pw / 2:.1f}", y=str(HEIGHT - 20),
                  **{"text-anchor": "middle", "font-size": "14"}).text = x_label
    ET.SubElement(axes, "text", x="20", y=f"{MARGIN['top'] + ph / 2:.1f}",
                  transform=f"rotate(-90 20 {MARGIN['top'] + ph / 2:.1f})",
                  **{"text-anchor": "middle", "font-size": "14"}).text = y_label
    if title:
        ET.SubElement(axes, "text", x=f"{WIDTH / 2:.1f}", y="30",
                      **{"text-anchor": "middle", "font-size": "16"}).text = title

    count = 0
    legend = ET.SubElement(svg, "g", {"class": "legend", "font-family": "sans-serif", "font-size": "13"})
    for k, (name, pts) in enumerate(clean.items()):
        shape, colour = STYLES.get(name, _FALLBACK[k % len(_FALLBACK)])
        group = ET.SubElement(svg, "g", {"class": "series", "data-series": name})
        for x, y in pts:
            _marker(group, shape, sx(x), sy(y), colour, f"{name}: ({x:.4g}, {y:.4g})")
            count += 1
        ly = MARGIN["top"] + 20 + 24 * k
        lx = WIDTH - MARGIN["right"] + 20
        swatch = ET.SubElement(legend, shape if shape == "circle" else "polygon")
        if shape == "circle":
            swatch.attrib.update(cx=str(lx), cy=str(ly), r="5", fill=colour)
        else:
            swatch.attrib.update(points=f"{lx - 5},{ly - 5} {lx + 5},{ly - 5} {lx + 5},{ly + 5} {lx - 5},{ly + 5}",
                                 fill=colour)
        ET.SubElement(legend, "text", x=str(lx + 12), y=str(ly + 4)).text = f"{name.upper()} ({len(pts)})"

    tree = ET.ElementTree(svg)
    ET.indent(tree)
    tree.write(path, encoding="utf-8", xml_declaration=True)
    return count


def _finite(v) -> bool:
    return v is not None and isinstance(v, (int, float)) and math.isfinite(v)


def records_series(records: Iterable[dict], x_key: str, y_key: str) -> dict[str, list[tuple[float, float]]]:
    """Group sweep records by model kind into (x, y) metric pairs."""
    out: dict[str, list[tuple[float, float]]] = {}
    for rec in records:
        report = rec.get("report")
        if not report:
            continue
        out.setdefault(rec["model_kind"], []).append((report.get(x_key), report.get(y_key)))
    return out
