"""Minimal dependency-free SVG charts (line plots with error bars, histograms)."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = (60, 20, 40, 50)  # left, right, top, bottom
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    yerr: np.ndarray | None = None
    markers: bool = False


def _nice_ticks(lo: float, hi: float, n: int = 5):
    if not hi > lo:
        lo, hi = lo - 0.5, hi + 0.5
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step), lo, hi


class _Frame:
    def __init__(self, xlo, xhi, ylo, yhi):
        self.xt, self.xlo, self.xhi = _nice_ticks(xlo, xhi)
        self.yt, self.ylo, self.yhi = _nice_ticks(ylo, yhi)
        self.l, self.r, self.t, self.b = MARGIN

    def px(self, x):
        return self.l + (np.asarray(x) - self.xlo) / (self.xhi - self.xlo) * (WIDTH - self.l - self.r)

    def py(self, y):
        return HEIGHT - self.b - (np.asarray(y) - self.ylo) / (self.yhi - self.ylo) * (HEIGHT - self.t - self.b)

    def axes(self, title, xlabel, ylabel):
        out = [f'<rect x="{self.l}" y="{self.t}" width="{WIDTH - self.l - self.r}" '
               f'height="{HEIGHT - self.t - self.b}" fill="none" stroke="#333"/>']
        for v in self.xt:
            if self.xlo <= v <= self.xhi:
                x = self.px(v)
                out.append(f'<line x1="{x:.2f}" y1="{HEIGHT - self.b}" x2="{x:.2f}" y2="{HEIGHT - self.b + 4}" stroke="#333"/>')
                out.append(f'<text x="{x:.2f}" y="{HEIGHT - self.b + 16}" text-anchor="middle">{v:.4g}</text>')
        for v in self.yt:
            if self.ylo <= v <= self.yhi:
                y = self.py(v)
                out.append(f'<line x1="{self.l - 4}" y1="{y:.2f}" x2="{self.l}" y2="{y:.2f}" stroke="#333"/>')
                out.append(f'<text x="{self.l - 6}" y="{y + 4:.2f}" text-anchor="end">{v:.4g}</text>')
        out.append(f'<text x="{WIDTH / 2}" y="{self.t - 12}" text-anchor="middle" font-size="14">{escape(title)}</text>')
        out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
        out.append(f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>')
        return out


def _document(body) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'font-family="sans-serif" font-size="11">\n<rect width="100%" height="100%" fill="white"/>\n'
            + "\n".join(body) + "\n</svg>\n")


def _save(path, body) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_document(body))
    return path


def line_chart(path, series, title="", xlabel="", ylabel="") -> Path:
    series = [s for s in series if len(s.x)]
    if not series:
        raise ValueError("nothing to plot")
    xs = np.concatenate([s.x for s in series])
    lows = np.concatenate([s.y - (s.yerr if s.yerr is not None else 0) for s in series])
    highs = np.concatenate([s.y + (s.yerr if s.yerr is not None else 0) for s in series])
    pad = 0.05 * (np.max(highs) - np.min(lows) or 1.0)
    fr = _Frame(float(xs.min()), float(xs.max()), float(lows.min() - pad), float(highs.max() + pad))
    body = fr.axes(title, xlabel, ylabel)
    for i, s in enumerate(series):
        c = COLORS[i % len(COLORS)]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(fr.px(s.x), fr.py(s.y)))
        if s.markers:
            for a, b in zip(fr.px(s.x), fr.py(s.y)):
                body.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{c}"/>')
        else:
            body.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        if s.yerr is not None:
            for a, lo, hi in zip(fr.px(s.x), fr.py(s.y - s.yerr), fr.py(s.y + s.yerr)):
                body.append(f'<line x1="{a:.2f}" y1="{lo:.2f}" x2="{a:.2f}" y2="{hi:.2f}" stroke="{c}"/>')
        y = fr.t + 14 + 14 * i
        body.append(f'<line x1="{fr.l + 10}" y1="{y - 4}" x2="{fr.l + 30}" y2="{y - 4}" stroke="{c}" stroke-width="2"/>')
        body.append(f'<text x="{fr.l + 36}" y="{y}">{escape(s.label)}</text>')
    return _save(path, body)


def histogram(path, samples, bins=50, title="", xlabel="") -> Path:
    samples = np.asarray(samples, dtype=float)
    samples = samples[np.isfinite(samples)]
    if samples.size == 0:
        raise ValueError("nothing to plot")
    counts, edges = np.histogram(samples, bins=bins)
    dens = counts / (samples.size * np.diff(edges))
    fr = _Frame(float(edges[0]), float(edges[-1]), 0.0, float(dens.max() * 1.05 or 1.0))
    body = fr.axes(title, xlabel, "density")
    base = fr.py(0.0)
    for lo, hi, d in zip(fr.px(edges[:-1]), fr.px(edges[1:]), fr.py(dens)):
        body.append(f'<rect x="{lo:.2f}" y="{d:.2f}" width="{max(hi - lo, 0.5):.2f}" '
                    f'height="{base - d:.2f}" fill="{COLORS[0]}" fill-opacity="0.7"/>')
    return _save(path, body)
