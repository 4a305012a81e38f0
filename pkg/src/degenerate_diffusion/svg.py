"""Minimal deterministic SVG line plots (no plotting dependency)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

LOG_FLOOR = 1e-30
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
W, H = 640, 420
ML, MR, MT, MB = 70, 20, 40, 50


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def line_plot(series, title="", xlabel="", ylabel="", logy=False, markers=False) -> str:
    """series: list of (label, x, y).  Returns the SVG document as text."""
    prepared = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if logy:
            y = np.log10(np.maximum(np.abs(y), LOG_FLOOR))
        prepared.append((label, x, y))
    xs = np.concatenate([p[1] for p in prepared]) if prepared else np.array([0.0, 1.0])
    ys = np.concatenate([p[2] for p in prepared]) if prepared else np.array([0.0, 1.0])
    ok = np.isfinite(xs) & np.isfinite(ys)
    xs, ys = (xs[ok], ys[ok]) if ok.any() else (np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return ML + (v - x0) / (x1 - x0) * (W - ML - MR)

    def py(v):
        return H - MB - (v - y0) / (y1 - y0) * (H - MT - MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" fill="none" stroke="black"/>']
    for k in range(5):
        xv = x0 + k * (x1 - x0) / 4
        yv = y0 + k * (y1 - y0) / 4
        ylab = f"1e{yv:.1f}" if logy else _fmt(yv)
        out.append(f'<text x="{px(xv):.2f}" y="{H - MB + 18}" text-anchor="middle" font-size="11">{_fmt(xv)}</text>')
        out.append(f'<text x="{ML - 6}" y="{py(yv) + 4:.2f}" text-anchor="end" font-size="11">{ylab}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{H / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {H / 2})">{escape(ylabel + (" (log10)" if logy else ""))}</text>')
    for i, (label, x, y) in enumerate(prepared):
        color = _COLORS[i % len(_COLORS)]
        keep = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[keep], y[keep]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        if markers:
            for a, b in zip(x[keep], y[keep]):
                out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="{color}"/>')
        out.append(f'<text x="{W - MR - 8}" y="{MT + 16 + 14 * i}" text-anchor="end" '
                   f'font-size="11" fill="{color}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(values, x, t, title="", n_levels=64) -> str:
    """Coarse raster of a space-time surface u(x, t) as rectangles."""
    v = np.asarray(values, dtype=float)
    step_t = max(1, math.ceil(v.shape[0] / 120))
    step_x = max(1, math.ceil(v.shape[1] / 120))
    v = v[::step_t, ::step_x]
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo if hi > lo else 1.0
    nt, nx = v.shape
    cw = (W - ML - MR) / nx
    ch = (H - MT - MB) / nt
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>']
    for i in range(nt):
        for j in range(nx):
            level = int((v[i, j] - lo) / span * (n_levels - 1))
            r = int(255 * level / (n_levels - 1))
            out.append(f'<rect x="{ML + j * cw:.2f}" y="{H - MB - (i + 1) * ch:.2f}" width="{cw + 0.05:.2f}" '
                       f'height="{ch + 0.05:.2f}" fill="rgb({r},{64},{255 - r})"/>')
    out.append(f'<text x="{W / 2}" y="{H - 10}" text-anchor="middle" font-size="12">x in [0, {_fmt(float(x[-1]))}]</text>')
    out.append(f'<text x="16" y="{H / 2}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {H / 2})">t in [0, {_fmt(float(t[-1]))}]</text>')
    out.append(f'<text x="{W - MR}" y="{MT - 6}" text-anchor="end" font-size="11">min {_fmt(lo)}, max {_fmt(hi)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
