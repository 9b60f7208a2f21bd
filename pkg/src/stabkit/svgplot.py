"""Minimal dependency-free SVG line plots (polyline + axes + tick labels)."""
from __future__ import annotations

from pathlib import Path

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_e = int(np.floor(np.log10(lo)))
        hi_e = int(np.ceil(np.log10(hi)))
        return [10.0**e for e in range(lo_e, hi_e + 1) if lo <= 10.0**e <= hi]
    raw = np.linspace(lo, hi, 5)
    return [float(v) for v in raw]


def line_plot(path, series: list[tuple[np.ndarray, np.ndarray, str]], title: str,
              xlabel: str, ylabel: str, logx: bool = False, logy: bool = False) -> None:
    """Write one SVG with the given (x, y, label) series.

    Log axes drop non-positive points.  Intended for scan and decay curves;
    no external plotting dependency.
    """
    cleaned = []
    for xs, ys, label in series:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys)
        if logx:
            keep &= xs > 0
        if logy:
            keep &= ys > 0
        cleaned.append((xs[keep], ys[keep], label))
    all_x = np.concatenate([c[0] for c in cleaned]) if cleaned else np.array([1.0])
    all_y = np.concatenate([c[1] for c in cleaned]) if cleaned else np.array([1.0])
    if all_x.size == 0 or all_y.size == 0:
        all_x, all_y = np.array([1.0, 2.0]), np.array([1.0, 2.0])

    def tx(v):
        lo, hi = all_x.min(), all_x.max()
        if logx:
            lo, hi, v = np.log10(lo), np.log10(hi), np.log10(v)
        span = (hi - lo) or 1.0
        return MARGIN + (v - lo) / span * (WIDTH - 2 * MARGIN)

    def ty(v):
        lo, hi = all_y.min(), all_y.max()
        if logy:
            lo, hi, v = np.log10(lo), np.log10(hi), np.log10(v)
        span = (hi - lo) or 1.0
        return HEIGHT - MARGIN - (v - lo) / span * (HEIGHT - 2 * MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH/2:.1f}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT-MARGIN}" x2="{WIDTH-MARGIN}" y2="{HEIGHT-MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT-MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH/2:.1f}" y="{HEIGHT-12}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{HEIGHT/2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {HEIGHT/2:.1f})">{ylabel}</text>',
    ]
    for v in _ticks(float(all_x.min()), float(all_x.max()), logx):
        parts.append(f'<line x1="{tx(v):.1f}" y1="{HEIGHT-MARGIN}" x2="{tx(v):.1f}" '
                     f'y2="{HEIGHT-MARGIN+5}" stroke="black"/>')
        parts.append(f'<text x="{tx(v):.1f}" y="{HEIGHT-MARGIN+18}" text-anchor="middle" '
                     f'font-size="10">{v:.3g}</text>')
    for v in _ticks(float(all_y.min()), float(all_y.max()), logy):
        parts.append(f'<line x1="{MARGIN-5}" y1="{ty(v):.1f}" x2="{MARGIN}" '
                     f'y2="{ty(v):.1f}" stroke="black"/>')
        parts.append(f'<text x="{MARGIN-8}" y="{ty(v):.1f}" text-anchor="end" '
                     f'font-size="10">{v:.3g}</text>')
    for i, (xs, ys, label) in enumerate(cleaned):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{tx(x):.2f},{ty(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{WIDTH-MARGIN}" y="{MARGIN + 16*i}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{label}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
