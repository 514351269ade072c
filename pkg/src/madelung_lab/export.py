"""CSV profiles and dependency-free SVG line plots."""
from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def write_csv(path, columns: dict[str, np.ndarray]) -> Path:
    """Write equal-length columns with a header row."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[n]).reshape(-1) for n in names]
    if len({d.size for d in data}) > 1:
        raise ValueError("columns must have equal length")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*data):
            w.writerow([repr(float(v)) for v in row])
    return path


def svg_lines(path, x, series: dict[str, np.ndarray], title: str = "", width: int = 640, height: int = 360) -> Path:
    """One panel of polylines, each series scaled to the common y range.

    Non-finite samples break the line rather than being plotted.
    """
    path = Path(path)
    x = np.asarray(x, dtype=float)
    pad = 40
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(1)
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi == lo:
        lo, hi = lo - 1, hi + 1
    sx = lambda v: pad + (v - x.min()) / (x.max() - x.min()) * (width - 2 * pad)
    sy = lambda v: height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="#888"/>',
        f'<text x="{width / 2}" y="{pad / 2 + 5}" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{pad}" y="{height - pad / 3}" font-size="10">{x.min():.3g}</text>',
        f'<text x="{width - pad}" y="{height - pad / 3}" font-size="10" text-anchor="end">{x.max():.3g}</text>',
        f'<text x="{pad - 4}" y="{height - pad}" font-size="10" text-anchor="end">{lo:.3g}</text>',
        f'<text x="{pad - 4}" y="{pad + 8}" font-size="10" text-anchor="end">{hi:.3g}</text>',
    ]
    for i, (name, y) in enumerate(zip(series, ys)):
        colour = _COLOURS[i % len(_COLOURS)]
        runs, cur = [], []
        for xi, yi in zip(x, y):
            if np.isfinite(yi):
                cur.append(f"{sx(xi):.2f},{sy(yi):.2f}")
            elif cur:
                runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        for run in runs:
            parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{" ".join(run)}"/>')
        parts.append(f'<text x="{width - pad - 4}" y="{pad + 14 * (i + 1)}" font-size="11" fill="{colour}" text-anchor="end">{escape(name)}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")
    return path
