"""Standalone SVG line plots and step histograms."""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#333333"]


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    style: str = "line"          # line | markers | step
    yerr: np.ndarray | None = None


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v):
    return f"{v:.4g}"


def render(series: list[Series], title: str = "", xlabel: str = "", ylabel: str = "",
           logx: bool = False) -> str:
    xs = np.concatenate([np.asarray(s.x, float) for s in series]) if series else np.array([0.0, 1.0])
    ys = [np.asarray(s.y, float) for s in series]
    ys += [np.asarray(s.y, float) + np.asarray(s.yerr, float) for s in series if s.yerr is not None]
    ys += [np.asarray(s.y, float) - np.asarray(s.yerr, float) for s in series if s.yerr is not None]
    yall = np.concatenate(ys) if ys else np.array([0.0, 1.0])
    yall = yall[np.isfinite(yall)]
    if logx:
        xs = xs[xs > 0]
    fx = (lambda v: np.log10(v)) if logx else (lambda v: v)
    x0, x1 = (float(fx(xs.min())), float(fx(xs.max()))) if xs.size else (0.0, 1.0)
    y0, y1 = (float(yall.min()), float(yall.max())) if yall.size else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(v):
        return MARGIN["left"] + (fx(v) - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
           f'fill="none" stroke="black"/>']
    for t in _ticks(y0, y1):
        y = py(t)
        out.append(f'<line x1="{MARGIN["left"] - 4}" y1="{y:.1f}" x2="{MARGIN["left"]}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 7}" y="{y + 4:.1f}" text-anchor="end">{_fmt(t)}</text>')
    for t in _ticks(x0, x1):
        x = MARGIN["left"] + (t - x0) / (x1 - x0) * pw
        label = _fmt(10 ** t) if logx else _fmt(t)
        out.append(f'<line x1="{x:.1f}" y1="{HEIGHT - MARGIN["bottom"]}" x2="{x:.1f}" '
                   f'y2="{HEIGHT - MARGIN["bottom"] + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{HEIGHT - MARGIN["bottom"] + 17}" text-anchor="middle">{label}</text>')
    out.append(f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16 {MARGIN["top"] + ph / 2}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')

    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        x, y = np.asarray(s.x, float), np.asarray(s.y, float)
        ok = np.isfinite(y) & (x > 0 if logx else True)
        x, y = x[ok], y[ok]
        if s.style == "step" and x.size:
            pts = []
            for j in range(x.size):
                left = x[j] - (x[1] - x[0]) / 2 if x.size > 1 else x[j]
                right = x[j] + (x[1] - x[0]) / 2 if x.size > 1 else x[j]
                pts += [(px(left), py(y[j])), (px(right), py(y[j]))]
            d = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1"/>')
        elif s.style == "line" and x.size:
            d = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
            out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        else:
            err = np.asarray(s.yerr, float)[ok] if s.yerr is not None else None
            for j, (a, b) in enumerate(zip(x, y)):
                if err is not None and np.isfinite(err[j]):
                    out.append(f'<line x1="{px(a):.2f}" y1="{py(b - err[j]):.2f}" x2="{px(a):.2f}" '
                               f'y2="{py(b + err[j]):.2f}" stroke="{color}"/>')
                out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="{color}"/>')
        if s.label:
            ly = MARGIN["top"] + 16 + 16 * i
            lx = WIDTH - MARGIN["right"] - 150
            out.append(f'<rect x="{lx}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{lx + 15}" y="{ly + 1}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write(path, series: list[Series], **kw) -> None:
    with open(path, "w") as fh:
        fh.write(render(series, **kw))
