"""Minimal deterministic SVG line plots (no plotting dependency).

Coordinates are written with fixed precision so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=36, bottom=50)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
          "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def nice_ticks(lo: float, hi: float, n: int = 6) -> list:
    """Round tick positions covering [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.6g}"


class Canvas:
    """Data-to-pixel mapping plus accumulated SVG elements."""

    def __init__(self, xlim, ylim, title="", xlabel="", ylabel="", equal=False):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        if equal:
            # widen whichever range is short so one unit has the same length on both axes
            sx = (self.x1 - self.x0) / self.pw
            sy = (self.y1 - self.y0) / self.ph
            if sx > sy:
                c, h = 0.5 * (self.y0 + self.y1), 0.5 * sx * self.ph
                self.y0, self.y1 = c - h, c + h
            else:
                c, h = 0.5 * (self.x0 + self.x1), 0.5 * sy * self.pw
                self.x0, self.x1 = c - h, c + h
        self.items = []
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel

    def px(self, x):
        return MARGIN["left"] + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN["top"] + (self.y1 - np.asarray(y)) / (self.y1 - self.y0) * self.ph

    def polyline(self, x, y, color, width=1.5, dash=None):
        """Add a path; points outside the plot box split it into pieces."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = (np.isfinite(x) & np.isfinite(y) & (x >= self.x0) & (x <= self.x1)
                  & (y >= self.y0) & (y <= self.y1))
        parts = []
        run = []
        for k in range(len(x)):
            if inside[k]:
                run.append(k)
            elif run:
                parts.append(run)
                run = []
        if run:
            parts.append(run)
        d = []
        for run in parts:
            xs, ys = self.px(x[run]), self.py(y[run])
            d.append("M" + " L".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(xs, ys)))
        if not d:
            return
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<path d="{" ".join(d)}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{extra}/>')

    def marker(self, x, y, label=""):
        cx, cy = float(self.px(x)), float(self.py(y))
        self.items.append(f'<path d="M{_fmt(cx - 5)},{_fmt(cy)} L{_fmt(cx + 5)},{_fmt(cy)} '
                          f'M{_fmt(cx)},{_fmt(cy - 5)} L{_fmt(cx)},{_fmt(cy + 5)}" '
                          'stroke="black" stroke-width="2"/>')
        if label:
            self.items.append(f'<text x="{_fmt(cx + 6)}" y="{_fmt(cy - 6)}" '
                              f'font-size="11">{escape(label)}</text>')

    def legend(self, labels):
        for k, (label, color) in enumerate(labels):
            y = MARGIN["top"] + 14 + 15 * k
            x = WIDTH - MARGIN["right"] - 150
            self.items.append(f'<path d="M{x},{y - 4} L{x + 18},{y - 4}" stroke="{color}" '
                              'stroke-width="2"/>')
            self.items.append(f'<text x="{x + 24}" y="{y}" font-size="11">{escape(label)}</text>')

    def _axes(self):
        out = []
        l, t = MARGIN["left"], MARGIN["top"]
        out.append(f'<rect x="{l}" y="{t}" width="{self.pw}" height="{self.ph}" '
                   'fill="none" stroke="black"/>')
        for v in nice_ticks(self.x0, self.x1):
            X = _fmt(float(self.px(v)))
            out.append(f'<path d="M{X},{t + self.ph} L{X},{t + self.ph + 5}" stroke="black"/>')
            out.append(f'<text x="{X}" y="{t + self.ph + 18}" font-size="11" '
                       f'text-anchor="middle">{_tick_label(v)}</text>')
        for v in nice_ticks(self.y0, self.y1):
            Y = _fmt(float(self.py(v)))
            out.append(f'<path d="M{l - 5},{Y} L{l},{Y}" stroke="black"/>')
            out.append(f'<text x="{l - 8}" y="{Y}" font-size="11" text-anchor="end" '
                       f'dominant-baseline="middle">{_tick_label(v)}</text>')
        if self.y0 < 0 < self.y1:
            Y = _fmt(float(self.py(0.0)))
            out.append(f'<path d="M{l},{Y} L{l + self.pw},{Y}" stroke="#999" '
                       'stroke-dasharray="3,3"/>')
        out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" font-size="12" '
                   f'text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="14" y="{t + self.ph / 2}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 14 {t + self.ph / 2})">{escape(self.ylabel)}</text>')
        out.append(f'<text x="{WIDTH / 2}" y="22" font-size="14" '
                   f'text-anchor="middle">{escape(self.title)}</text>')
        return out

    def svg(self) -> str:
        body = "\n".join(self._axes() + self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
                f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n{body}\n</svg>\n')


def _pad(lo, hi, frac=0.05):
    if hi <= lo:
        return lo - 1.0, hi + 1.0
    d = (hi - lo) * frac
    return lo - d, hi + d


def modal_impedance_svg(trace, points=(), title=None) -> str:
    """|lambda_z| and Re{lambda_z} of one trace against frequency."""
    f = np.asarray(trace.f_hz)
    z = np.asarray(trace.lambda_z)
    mag, re = np.abs(z), z.real
    marks = [p.re_at_x for p in points if p.re_at_x is not None]
    vals = np.concatenate([mag, re, np.asarray(marks, dtype=float)])
    vals = vals[np.isfinite(vals)]
    ylim = _pad(float(vals.min()), float(vals.max())) if vals.size else (-1.0, 1.0)
    c = Canvas(_pad(float(f[0]), float(f[-1]), 0.0) if f[-1] > f[0] else (f[0] - 1, f[0] + 1),
               ylim, title or f"modal impedance, mode {trace.mode_id}",
               "frequency [Hz]", "impedance [ohm]")
    c.polyline(f, mag, COLORS[0])
    c.polyline(f, re, COLORS[1], dash="5,3")
    for p in points:
        if p.f_x is not None and p.re_at_x is not None:
            c.marker(p.f_x, p.re_at_x, f"{p.f_x:.1f} Hz {p.verdict}")
    c.legend([("|lambda_z|", COLORS[0]), ("Re{lambda_z}", COLORS[1])])
    return c.svg()


def nyquist_svg(loci, xlim=(-3.0, 1.0), ylim=(-2.0, 2.0), title="eigenloci of L") -> str:
    """Eigenloci in the complex plane, clipped to a window around (-1, 0)."""
    c = Canvas(xlim, ylim, title, "real", "imaginary", equal=True)
    for k, lc in enumerate(loci):
        v = np.asarray(lc.values)
        c.polyline(v.real, v.imag, COLORS[k % len(COLORS)], width=1.2)
    c.marker(-1.0, 0.0, "(-1, 0)")
    return c.svg()
