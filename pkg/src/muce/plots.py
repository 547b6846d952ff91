"""Deterministic SVG plots with CSV companions.

Output depends only on the plot specification: fixed canvas, no timestamps,
y axis pinned to [0, 1].
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

from .features import MuceError

WIDTH, HEIGHT = 560, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 40, 50

COLORS = {
    "ice": "#1f77b4",
    "max": "#1f4fd8",
    "min": "#e6b800",
    "observation": "#2ca02c",
    "range": "#d62728",
    "extremal_max": "#800000",
    "extremal_min": "#00bcd4",
    "bar": "#9ecae1",
    "whisker": "#333333",
}


class IoFailure(MuceError):
    pass


@dataclass(frozen=True)
class Series:
    name: str
    xs: tuple
    ys: tuple
    color: str
    dashed: bool = False


@dataclass(frozen=True)
class Marker:
    name: str
    x: float
    y: float
    color: str
    shape: str = "star"


@dataclass(frozen=True)
class Bar:
    label: str
    height: float
    low: float | None = None
    high: float | None = None
    annotation: str = ""


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: ``kind`` is ``"line"`` (ordered features) or ``"bars"``."""

    kind: str
    title: str
    x_label: str
    x_range: tuple[float, float] | None = None
    series: tuple[Series, ...] = ()
    markers: tuple[Marker, ...] = ()
    bars: tuple[Bar, ...] = field(default=())


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick(v: float) -> str:
    s = f"{v:.4g}"
    return "0" if s == "-0" else s


def padded_range(lo: float, hi: float, pad: float = 0.05) -> tuple[float, float]:
    if hi > lo:
        w = (hi - lo) * pad
        return lo - w, hi + w
    half = max(abs(lo) * pad, 0.5)
    return lo - half, hi + half


def _star(cx: float, cy: float, r: float = 7.0) -> str:
    pts = []
    for k in range(10):
        rad = r if k % 2 == 0 else r * 0.45
        a = math.pi / 2 + k * math.pi / 5
        pts.append(f"{_fmt(cx + rad * math.cos(a))},{_fmt(cy - rad * math.sin(a))}")
    return " ".join(pts)


def render_svg(spec: PlotSpec) -> str:
    pw, ph = WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B

    def sy(y: float) -> float:
        return MARGIN_T + ph * (1.0 - y)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(spec.title)}</text>',
    ]
    # y axis, fixed to [0, 1]
    for k in range(5):
        y = k / 4
        out.append(f'<line x1="{MARGIN_L}" y1="{_fmt(sy(y))}" x2="{MARGIN_L + pw}" y2="{_fmt(sy(y))}" stroke="#e0e0e0"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{_fmt(sy(y) + 4)}" text-anchor="end">{y:.2f}</text>')
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(
        f'<text x="{MARGIN_L + pw / 2:.2f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(spec.x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{MARGIN_T + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.2f})">prediction</text>'
    )

    if spec.kind == "line":
        x0, x1 = spec.x_range

        def sx(x: float) -> float:
            return MARGIN_L + pw * (x - x0) / (x1 - x0)

        for k in range(5):
            x = x0 + (x1 - x0) * k / 4
            out.append(f'<text x="{_fmt(sx(x))}" y="{MARGIN_T + ph + 16}" text-anchor="middle">{_tick(x)}</text>')
        for s in spec.series:
            pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in zip(s.xs, s.ys))
            dash = ' stroke-dasharray="6 4"' if s.dashed else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{s.color}" stroke-width="2"{dash}/>')
        for m in spec.markers:
            out.append(_marker(m, sx(m.x), sy(m.y)))
    elif spec.kind == "bars":
        n = max(len(spec.bars), 1)
        slot = pw / n
        for k, b in enumerate(spec.bars):
            cx = MARGIN_L + slot * (k + 0.5)
            bw = slot * 0.6
            out.append(
                f'<rect x="{_fmt(cx - bw / 2)}" y="{_fmt(sy(b.height))}" width="{_fmt(bw)}" '
                f'height="{_fmt(sy(0) - sy(b.height))}" fill="{COLORS["bar"]}" stroke="black"/>'
            )
            if b.low is not None and b.high is not None:
                for y in (b.low, b.high):
                    out.append(
                        f'<line x1="{_fmt(cx - bw / 6)}" y1="{_fmt(sy(y))}" x2="{_fmt(cx + bw / 6)}" '
                        f'y2="{_fmt(sy(y))}" stroke="{COLORS["whisker"]}" stroke-width="2"/>'
                    )
                out.append(
                    f'<line x1="{_fmt(cx)}" y1="{_fmt(sy(b.low))}" x2="{_fmt(cx)}" y2="{_fmt(sy(b.high))}" '
                    f'stroke="{COLORS["whisker"]}" stroke-width="2"/>'
                )
            out.append(f'<text x="{_fmt(cx)}" y="{MARGIN_T + ph + 16}" text-anchor="middle">{escape(b.label)}</text>')
            if b.annotation:
                out.append(f'<text x="{_fmt(cx)}" y="{_fmt(sy(b.height) - 4)}" text-anchor="middle">{escape(b.annotation)}</text>')
        for m in spec.markers:
            out.append(_marker(m, MARGIN_L + slot * (m.x + 0.5), sy(m.y)))
    else:
        raise ValueError(f"unknown plot kind {spec.kind!r}")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _marker(m: Marker, px: float, py: float) -> str:
    if m.shape == "star":
        return f'<polygon points="{_star(px, py)}" fill="{m.color}" stroke="black" stroke-width="0.5"><title>{escape(m.name)}</title></polygon>'
    return f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="5" fill="{m.color}" stroke="black" stroke-width="0.5"><title>{escape(m.name)}</title></circle>'


def render_csv(spec: PlotSpec) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if spec.kind == "bars":
        writer.writerow(["label", "height", "low", "high"])
        for b in spec.bars:
            writer.writerow([b.label, repr(b.height), "" if b.low is None else repr(b.low), "" if b.high is None else repr(b.high)])
    else:
        writer.writerow(["series", "x", "y"])
        for s in spec.series:
            for x, y in zip(s.xs, s.ys):
                writer.writerow([s.name, repr(x), repr(y)])
    for m in spec.markers:
        writer.writerow([f"marker:{m.name}", repr(m.x), repr(m.y)] + ([""] if spec.kind == "bars" else []))
    return buf.getvalue()


def emit_plot(spec: PlotSpec, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.svg`` and its ``<path>.csv`` companion; returns both paths."""
    if spec.kind == "line" and not any(s.xs for s in spec.series):
        raise ValueError("nothing to plot")
    if spec.kind == "bars" and not spec.bars:
        raise ValueError("nothing to plot")
    path = Path(path)
    svg_path, csv_path = path.with_suffix(".svg"), path.with_suffix(".csv")
    try:
        svg_path.write_text(render_svg(spec))
        csv_path.write_text(render_csv(spec))
    except OSError as exc:
        raise IoFailure(f"could not write plot {path}: {exc}") from exc
    return svg_path, csv_path
