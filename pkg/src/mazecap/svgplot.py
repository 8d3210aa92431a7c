"""Minimal log-log scatter plots with a fitted line, written as SVG."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 560, 420
MARGIN = dict(left=70, right=20, top=40, bottom=55)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


@dataclass
class Series:
    x: list[float]
    y: list[float]
    label: str = ""
    fit: tuple[float, float] | None = None  # (slope, intercept) in log10 space


@dataclass
class LogLogPlot:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    series: list[Series] = field(default_factory=list)

    def add(self, x, y, label: str = "", fit: bool = True) -> Series:
        x = [float(v) for v in x]
        y = [float(v) for v in y]
        if any(v <= 0 for v in x + y):
            raise ValueError("log-log plot needs positive data")
        line = None
        if fit and len(x) >= 2:
            slope, icpt = np.polyfit(np.log10(x), np.log10(y), 1)
            line = (float(slope), float(icpt))
        s = Series(x, y, label, line)
        self.series.append(s)
        return s

    def render(self) -> str:
        xs = [v for s in self.series for v in s.x]
        ys = [v for s in self.series for v in s.y]
        if not xs:
            raise ValueError("nothing to plot")
        x0, x1 = _decade_range(xs)
        y0, y1 = _decade_range(ys)
        pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

        def px(v):
            return MARGIN["left"] + pw * (math.log10(v) - x0) / (x1 - x0)

        def py(v):
            return MARGIN["top"] + ph * (1.0 - (math.log10(v) - y0) / (y1 - y0))

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
            'fill="none" stroke="black"/>',
        ]
        for lo, hi, horizontal in ((x0, x1, True), (y0, y1, False)):
            for d in range(math.floor(lo), math.ceil(hi) + 1):
                for k in range(1, 10):
                    e = d + math.log10(k)
                    if not lo - 1e-9 <= e <= hi + 1e-9:
                        continue
                    v = 10.0**e
                    major = k == 1
                    if horizontal:
                        X = px(v)
                        out.append(_line(X, MARGIN["top"], X, MARGIN["top"] + ph, major))
                        if major:
                            out.append(_text(X, HEIGHT - MARGIN["bottom"] + 18, _fmt(v), "middle"))
                    else:
                        Y = py(v)
                        out.append(_line(MARGIN["left"], Y, MARGIN["left"] + pw, Y, major))
                        if major:
                            out.append(_text(MARGIN["left"] - 6, Y + 4, _fmt(v), "end"))
        for i, s in enumerate(self.series):
            col = COLORS[i % len(COLORS)]
            for a, b in zip(s.x, s.y):
                out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="4" fill="{col}"/>')
            if s.fit is not None:
                m, c = s.fit
                lx0, lx1 = min(s.x), max(s.x)
                ly0, ly1 = 10 ** (c + m * math.log10(lx0)), 10 ** (c + m * math.log10(lx1))
                out.append(
                    f'<line x1="{px(lx0):.2f}" y1="{py(ly0):.2f}" x2="{px(lx1):.2f}" y2="{py(ly1):.2f}" '
                    f'stroke="{col}" stroke-width="1.5"/>'
                )
            label = s.label + (f" (slope {s.fit[0]:.3f})" if s.fit is not None else "")
            if label:
                ly = MARGIN["top"] + 16 + 16 * i
                out.append(f'<circle cx="{MARGIN["left"] + 12}" cy="{ly - 4}" r="4" fill="{col}"/>')
                out.append(_text(MARGIN["left"] + 22, ly, label, "start"))
        out.append(_text(WIDTH / 2, 24, self.title, "middle", size=14))
        out.append(_text(WIDTH / 2, HEIGHT - 12, self.xlabel, "middle"))
        out.append(
            f'<text x="18" y="{HEIGHT / 2}" text-anchor="middle" '
            f'transform="rotate(-90 18 {HEIGHT / 2})">{escape(self.ylabel)}</text>'
        )
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())


def _decade_range(vals) -> tuple[float, float]:
    lo, hi = math.log10(min(vals)), math.log10(max(vals))
    pad = max(0.05 * (hi - lo), 0.05)
    return lo - pad, hi + pad


def _fmt(v: float) -> str:
    e = round(math.log10(v))
    return f"1e{e}" if abs(e) > 2 else f"{v:g}"


def _line(x0, y0, x1, y1, major: bool) -> str:
    col = "#bbbbbb" if major else "#eeeeee"
    return f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" stroke="{col}"/>'


def _text(x, y, s, anchor, size=12) -> str:
    return f'<text x="{x:.2f}" y="{y:.2f}" text-anchor="{anchor}" font-size="{size}">{escape(s)}</text>'
