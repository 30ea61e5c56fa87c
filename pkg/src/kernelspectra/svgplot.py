"""Minimal standalone SVG plots: histogram bars plus overlay curves.

Written directly (no plotting dependency) so emitted artifacts are
self-contained and byte-reproducible.
"""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 24, 48


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


class SvgPlot:
    """One x/y panel; add histogram and line layers, then write."""

    def __init__(self, title: str = "", xlabel: str = "", ylabel: str = "density"):
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self._hists = []  # (edges, heights, color)
        self._lines = []  # (x, y, color)

    def add_histogram(self, edges, heights, color: str = "#9db8d9"):
        self._hists.append((np.asarray(edges, float), np.asarray(heights, float), color))

    def add_line(self, x, y, color: str = "#c23b22"):
        self._lines.append((np.asarray(x, float), np.asarray(y, float), color))

    def _ranges(self):
        xs, ys = [], []
        for edges, heights, _ in self._hists:
            xs += [edges[0], edges[-1]]
            ys += [0.0, float(heights.max(initial=0.0))]
        for x, y, _ in self._lines:
            xs += [float(x[0]), float(x[-1])]
            ys += [0.0, float(y.max(initial=0.0))]
        if not xs:
            xs, ys = [0.0, 1.0], [0.0, 1.0]
        x0, x1 = min(xs), max(xs)
        y1 = max(ys) or 1.0
        return x0, x1 or 1.0, 0.0, y1 * 1.05

    def write(self, path) -> None:
        x0, x1, y0, y1 = self._ranges()
        pw = WIDTH - MARGIN_L - MARGIN_R
        ph = HEIGHT - MARGIN_T - MARGIN_B

        def px(x):
            return MARGIN_L + (x - x0) / (x1 - x0) * pw

        def py(y):
            return MARGIN_T + ph - (y - y0) / (y1 - y0) * ph

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        for edges, heights, color in self._hists:
            for i, h in enumerate(heights):
                if h <= 0:
                    continue
                x_left, x_right = px(edges[i]), px(edges[i + 1])
                y_top = py(h)
                parts.append(
                    f'<rect x="{x_left:.2f}" y="{y_top:.2f}" width="{x_right - x_left:.2f}" '
                    f'height="{py(0) - y_top:.2f}" fill="{color}" stroke="none"/>'
                )
        for x, y, color in self._lines:
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        # axes
        parts.append(
            f'<line x1="{MARGIN_L}" y1="{py(0):.2f}" x2="{WIDTH - MARGIN_R}" y2="{py(0):.2f}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{py(0):.2f}" '
            'stroke="black" stroke-width="1"/>'
        )
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            xv = x0 + frac * (x1 - x0)
            parts.append(
                f'<text x="{px(xv):.2f}" y="{HEIGHT - MARGIN_B + 18}" font-size="12" '
                f'text-anchor="middle" font-family="sans-serif">{_fmt(xv)}</text>'
            )
            yv = y0 + frac * (y1 - y0)
            parts.append(
                f'<text x="{MARGIN_L - 6}" y="{py(yv) + 4:.2f}" font-size="12" '
                f'text-anchor="end" font-family="sans-serif">{_fmt(yv)}</text>'
            )
        if self.title:
            parts.append(
                f'<text x="{WIDTH / 2}" y="{MARGIN_T - 8}" font-size="14" text-anchor="middle" '
                f'font-family="sans-serif">{self.title}</text>'
            )
        if self.xlabel:
            parts.append(
                f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle" '
                f'font-family="sans-serif">{self.xlabel}</text>'
            )
        parts.append("</svg>")
        with open(path, "w") as fh:
            fh.write("\n".join(parts) + "\n")
