"""Minimal deterministic SVG writer."""

from __future__ import annotations

import math
from typing import Iterable, Optional

from .geometry import GeneralizedCircle


def fmt(x: float) -> str:
    s = f"{x:.4f}"
    return "0.0000" if s == "-0.0000" else s


class Canvas:
    """Collects shapes in model coordinates and emits an SVG document.

    The y axis is flipped so that the picture matches the complex plane.
    """

    def __init__(self, size: int = 800, margin: float = 0.05):
        self.size = size
        self.margin = margin
        self.items: list[tuple[str, tuple]] = []
        self.box = [math.inf, math.inf, -math.inf, -math.inf]

    def _grow(self, x0: float, y0: float, x1: float, y1: float) -> None:
        b = self.box
        self.box = [min(b[0], x0), min(b[1], y0), max(b[2], x1), max(b[3], y1)]

    def circle(self, center: complex, radius: float, cls: str, dashed: bool = False) -> None:
        self._grow(center.real - radius, center.imag - radius, center.real + radius, center.imag + radius)
        self.items.append(("circle", (center, radius, cls, dashed)))

    def gcircle(self, C: GeneralizedCircle, cls: str, dashed: bool = False) -> None:
        if C.is_line():
            return
        self.circle(C.center, C.radius, cls, dashed)

    def segment(self, p: complex, q: complex, cls: str) -> None:
        self._grow(min(p.real, q.real), min(p.imag, q.imag), max(p.real, q.real), max(p.imag, q.imag))
        self.items.append(("line", (p, q, cls)))

    def text(self, at: complex, label: str, cls: str) -> None:
        self.items.append(("text", (at, label, cls)))

    def render(self, title: Optional[str] = None, styles: Iterable[str] = ()) -> str:
        if not self.items:
            raise ValueError("nothing to render")
        x0, y0, x1, y1 = self.box
        span = max(x1 - x0, y1 - y0, 1e-12)
        pad = span * self.margin
        scale = self.size / (span + 2 * pad)

        def X(z: complex) -> str:
            return fmt((z.real - x0 + pad) * scale)

        def Y(z: complex) -> str:
            return fmt((y1 + pad - z.imag) * scale)

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" height="{self.size}" '
               f'viewBox="0 0 {self.size} {self.size}">']
        if title:
            out.append(f"<title>{title}</title>")
        style = list(styles) or [
            ".white{fill:none;stroke:#000;stroke-width:1}",
            ".dual{fill:none;stroke:#555;stroke-width:1;stroke-dasharray:4 3}",
        ]
        out.append("<style>" + "".join(style) + "</style>")
        for kind, data in self.items:
            if kind == "circle":
                c, r, cls, dashed = data
                dash = ' stroke-dasharray="4 3"' if dashed else ""
                out.append(f'<circle class="{cls}" cx="{X(c)}" cy="{Y(c)}" r="{fmt(r * scale)}"{dash}/>')
            elif kind == "line":
                p, q, cls = data
                out.append(f'<line class="{cls}" x1="{X(p)}" y1="{Y(p)}" x2="{X(q)}" y2="{Y(q)}"/>')
            else:
                at, label, cls = data
                out.append(f'<text class="{cls}" x="{X(at)}" y="{Y(at)}">{label}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"
