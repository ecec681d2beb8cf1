"""
Line plots as standalone SVG (written directly, byte-stable) and as
interactive plotly HTML companions.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np
import pandas as pd
import plotly.express as px

WIDTH = 720
PANEL_HEIGHT = 320
MARGIN = (64, 24, 40, 56)  # left, right, top, bottom
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
N_TICKS = 5


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: Dict[str, Tuple[Sequence[float], Sequence[float]]] = field(default_factory=dict)


def _ticks(lo: float, hi: float) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, N_TICKS)


def _bounds(values: List[np.ndarray]) -> Tuple[float, float]:
    finite = np.concatenate([v[np.isfinite(v)] for v in values]) if values else np.zeros(0)
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        return lo - 0.5, hi + 0.5
    return lo, hi


def _panel_svg(panel: Panel, top: float) -> List[str]:
    left, right, pad_top, bottom = MARGIN
    x0, x1 = left, WIDTH - right
    y0, y1 = top + pad_top, top + PANEL_HEIGHT - bottom
    xs = [np.asarray(s[0], dtype=float) for s in panel.series.values()]
    ys = [np.asarray(s[1], dtype=float) for s in panel.series.values()]
    xlo, xhi = _bounds(xs)
    ylo, yhi = _bounds(ys)

    def sx(v: float) -> float:
        return x0 + (v - xlo) / (xhi - xlo) * (x1 - x0)

    def sy(v: float) -> float:
        return y1 - (v - ylo) / (yhi - ylo) * (y1 - y0)

    out = [
        f'<text x="{WIDTH / 2:.1f}" y="{top + 20:.1f}" text-anchor="middle" font-size="14">{escape(panel.title)}</text>',
        f'<rect x="{x0}" y="{y0:.1f}" width="{x1 - x0}" height="{y1 - y0:.1f}" fill="none" stroke="#444"/>',
    ]
    for t in _ticks(xlo, xhi):
        out.append(f'<line x1="{sx(t):.2f}" y1="{y1:.1f}" x2="{sx(t):.2f}" y2="{y1 + 4:.1f}" stroke="#444"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{y1 + 16:.1f}" text-anchor="middle" font-size="10">{t:.4g}</text>')
    for t in _ticks(ylo, yhi):
        out.append(f'<line x1="{x0 - 4}" y1="{sy(t):.2f}" x2="{x0}" y2="{sy(t):.2f}" stroke="#444"/>')
        out.append(f'<text x="{x0 - 6}" y="{sy(t) + 3:.2f}" text-anchor="end" font-size="10">{t:.4g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{y1 + 32:.1f}" text-anchor="middle" '
               f'font-size="11">{escape(panel.xlabel)}</text>')
    out.append(f'<text x="14" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" font-size="11" '
               f'transform="rotate(-90 14 {(y0 + y1) / 2:.1f})">{escape(panel.ylabel)}</text>')

    for k, (name, x, y) in enumerate(zip(panel.series, xs, ys)):
        color = PALETTE[k % len(PALETTE)]
        keep = np.isfinite(x) & np.isfinite(y)
        points = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[keep], y[keep]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        ly = y0 + 14 + 14 * k
        out.append(f'<line x1="{x1 - 130}" y1="{ly - 4:.1f}" x2="{x1 - 112}" y2="{ly - 4:.1f}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x1 - 106}" y="{ly:.1f}" font-size="10">{escape(name)}</text>')
    return out


def svg_line_plot(panels: Sequence[Panel], config_hash: str = "", seed: int = 0) -> str:
    """Panels stacked vertically; provenance goes into a leading comment"""
    height = PANEL_HEIGHT * len(panels)
    body = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- config_hash={config_hash} seed={seed} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
        f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{height}" fill="white"/>',
    ]
    for i, panel in enumerate(panels):
        body.extend(_panel_svg(panel, i * PANEL_HEIGHT))
    body.append("</svg>")
    return "\n".join(body) + "\n"


def html_line_plot(panel: Panel, config_hash: str = "", seed: int = 0) -> str:
    """Interactive version of one panel"""
    frames = [pd.DataFrame({"x": list(x), "y": list(y), "series": name})
              for name, (x, y) in panel.series.items()]
    data = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame({"x": [], "y": [], "series": []})
    fig = px.line(data, x="x", y="y", color="series", markers=True,
                  title=f"{panel.title} (config {config_hash}, seed {seed})",
                  labels={"x": panel.xlabel, "y": panel.ylabel})
    return fig.to_html(include_plotlyjs="cdn", full_html=True, div_id=f"plot-{config_hash or 'run'}")
