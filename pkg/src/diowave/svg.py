"""Minimal native SVG line plots (linear or log axes), deterministic output."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"]


@dataclass
class Series:
    label: str
    x: list[float]
    y: list[float]
    dashed: bool = False
    markers: bool = False


@dataclass
class Plot:
    title: str
    xlabel: str
    ylabel: str
    logx: bool = False
    logy: bool = False
    series: list[Series] = field(default_factory=list)
    width: int = 640
    height: int = 420

    def add(self, label, x, y, dashed=False, markers=False) -> "Plot":
        self.series.append(Series(label, [float(v) for v in x], [float(v) for v in y], dashed, markers))
        return self

    def _finite(self, xs, ys):
        for x, y in zip(xs, ys):
            if not (math.isfinite(x) and math.isfinite(y)):
                continue
            if (self.logx and x <= 0) or (self.logy and y <= 0):
                continue
            yield (math.log10(x) if self.logx else x), (math.log10(y) if self.logy else y)

    def render(self) -> str:
        pts = [list(self._finite(s.x, s.y)) for s in self.series]
        allp = [p for ps in pts for p in ps]
        ml, mr, mt, mb = 70, 20, 36, 50
        w, h = self.width - ml - mr, self.height - mt - mb
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="11">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<text x="{self.width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(self.title)}</text>',
        ]
        if allp:
            x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
            y0, y1 = min(p[1] for p in allp), max(p[1] for p in allp)
            if x1 == x0:
                x0, x1 = x0 - 0.5, x1 + 0.5
            if y1 == y0:
                y0, y1 = y0 - 0.5, y1 + 0.5
            pad = 0.04 * (y1 - y0)
            y0, y1 = y0 - pad, y1 + pad

            def sx(v):
                return ml + (v - x0) / (x1 - x0) * w

            def sy(v):
                return mt + h - (v - y0) / (y1 - y0) * h

            out.append(f'<rect x="{ml}" y="{mt}" width="{w}" height="{h}" fill="none" stroke="#444"/>')
            for i in range(6):
                fx = x0 + (x1 - x0) * i / 5
                fy = y0 + (y1 - y0) * i / 5
                out.append(f'<line x1="{sx(fx):.2f}" y1="{mt + h}" x2="{sx(fx):.2f}" y2="{mt + h + 4}" stroke="#444"/>')
                out.append(
                    f'<text x="{sx(fx):.2f}" y="{mt + h + 16}" text-anchor="middle">{_tick(fx, self.logx)}</text>'
                )
                out.append(f'<line x1="{ml - 4}" y1="{sy(fy):.2f}" x2="{ml}" y2="{sy(fy):.2f}" stroke="#444"/>')
                out.append(f'<text x="{ml - 6}" y="{sy(fy) + 4:.2f}" text-anchor="end">{_tick(fy, self.logy)}</text>')
            for k, (s, ps) in enumerate(zip(self.series, pts)):
                color = PALETTE[k % len(PALETTE)]
                if len(ps) > 1:
                    d = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in ps)
                    dash = ' stroke-dasharray="6,4"' if s.dashed else ""
                    out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
                if s.markers or len(ps) == 1:
                    for a, b in ps:
                        out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="{color}"/>')
                ly = mt + 14 + 14 * k
                out.append(f'<line x1="{ml + 10}" y1="{ly - 4}" x2="{ml + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
                out.append(f'<text x="{ml + 34}" y="{ly}">{escape(s.label)}</text>')
        else:
            out.append(f'<text x="{self.width / 2:.1f}" y="{self.height / 2:.1f}" text-anchor="middle">no data</text>')
        xl = self.xlabel + (" (log)" if self.logx else "")
        yl = self.ylabel + (" (log)" if self.logy else "")
        out.append(f'<text x="{ml + w / 2:.1f}" y="{self.height - 10}" text-anchor="middle">{escape(xl)}</text>')
        out.append(
            f'<text x="14" y="{mt + h / 2:.1f}" text-anchor="middle" transform="rotate(-90 14 {mt + h / 2:.1f})">{escape(yl)}</text>'
        )
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path: str | Path):
        Path(path).write_text(self.render())


def _tick(v: float, log: bool) -> str:
    if log:
        return f"1e{v:.1f}" if abs(v - round(v)) > 1e-9 else f"1e{int(round(v))}"
    return f"{v:.3g}"
