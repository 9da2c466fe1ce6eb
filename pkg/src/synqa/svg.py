"""Minimal deterministic inline-SVG charts for the HTML report."""

from __future__ import annotations

from html import escape

import numpy as np

COLORS = {"trn": "#7f7f7f", "syn": "#2e86de", "hol": "#e67e22"}
FONT = 'font-family="sans-serif" font-size="10"'


def _f(x: float) -> str:
    return f"{x:.2f}"


def _svg(width: int, height: int, body: list[str], title: str = "") -> str:
    head = f'<svg width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    t = f'<text x="{width / 2:.1f}" y="14" text-anchor="middle" {FONT} font-weight="bold">{escape(title)}</text>' if title else ""
    return head + t + "".join(body) + "</svg>"


def bar_chart(labels: list[str], series: dict[str, np.ndarray], title: str = "", width: int = 360, height: int = 200) -> str:
    """Grouped bars, one group per label, one bar per series."""
    left, right, top, bottom = 34, 8, 22, 46
    pw, ph = width - left - right, height - top - bottom
    vmax = max((float(np.max(v)) for v in series.values() if len(v)), default=1.0) or 1.0
    n = max(len(labels), 1)
    gw = pw / n
    bw = gw * 0.8 / max(len(series), 1)
    body = [f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="#333"/>']
    for tick in (0.0, 0.5, 1.0):
        y = top + ph - tick * ph
        body.append(f'<text x="{left - 3}" y="{_f(y + 3)}" text-anchor="end" {FONT}>{tick * vmax:.0%}</text>')
    for s, (name, vals) in enumerate(series.items()):
        color = COLORS.get(name, "#444")
        for i, v in enumerate(vals):
            h = float(v) / vmax * ph
            x = left + i * gw + gw * 0.1 + s * bw
            body.append(
                f'<rect x="{_f(x)}" y="{_f(top + ph - h)}" width="{_f(bw)}" height="{_f(h)}" fill="{color}">'
                f"<title>{escape(name)} {escape(labels[i])}: {float(v):.4f}</title></rect>"
            )
    for i, lbl in enumerate(labels):
        x = left + (i + 0.5) * gw
        short = lbl if len(lbl) <= 12 else lbl[:11] + "…"
        body.append(
            f'<text x="{_f(x)}" y="{top + ph + 8}" {FONT} text-anchor="end" '
            f'transform="rotate(-40 {_f(x)} {top + ph + 8})">{escape(short)}</text>'
        )
    body += _legend(list(series), width - right - 80, top)
    return _svg(width, height, body, title)


def _legend(names: list[str], x: float, y: float) -> list[str]:
    out = []
    for k, name in enumerate(names):
        out.append(f'<rect x="{_f(x)}" y="{_f(y + k * 12)}" width="8" height="8" fill="{COLORS.get(name, "#444")}"/>')
        out.append(f'<text x="{_f(x + 11)}" y="{_f(y + k * 12 + 8)}" {FONT}>{escape(name)}</text>')
    return out


def heatmap(matrix: np.ndarray, row_labels: list[str], col_labels: list[str], title: str = "", size: int = 200) -> str:
    left, top = 60, 22
    rows, cols = matrix.shape
    cw, ch = (size - 10) / max(cols, 1), (size - 10) / max(rows, 1)
    vmax = float(matrix.max()) or 1.0
    body = []
    for i in range(rows):
        body.append(
            f'<text x="{left - 3}" y="{_f(top + (i + 0.5) * ch + 3)}" text-anchor="end" {FONT}>'
            f"{escape(row_labels[i][:10])}</text>"
        )
        for j in range(cols):
            v = float(matrix[i, j])
            shade = int(round(255 - 200 * v / vmax))
            body.append(
                f'<rect x="{_f(left + j * cw)}" y="{_f(top + i * ch)}" width="{_f(cw)}" height="{_f(ch)}" '
                f'fill="rgb({shade},{shade},255)"><title>{escape(row_labels[i])} × {escape(col_labels[j])}: {v:.4f}</title></rect>'
            )
    return _svg(left + size, top + size + 4, body, title)


def scatter(points: dict[str, np.ndarray], centroids: dict[str, np.ndarray], title: str = "", size: int = 360, max_points: int = 2000) -> str:
    pad = 24
    allp = np.vstack([p for p in points.values() if len(p)] + [np.vstack(list(centroids.values()))])
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    sx = lambda v: pad + (v[0] - lo[0]) / span[0] * (size - 2 * pad)
    sy = lambda v: size - pad - (v[1] - lo[1]) / span[1] * (size - 2 * pad)
    body = []
    for name, pts in points.items():
        step = max(1, int(np.ceil(len(pts) / max_points)))
        color = COLORS.get(name, "#444")
        for p in pts[::step]:
            body.append(f'<circle cx="{_f(sx(p))}" cy="{_f(sy(p))}" r="1.6" fill="{color}" fill-opacity="0.45"/>')
    for name, c in centroids.items():
        color = COLORS.get(name, "#444")
        body.append(
            f'<path d="M{_f(sx(c) - 6)} {_f(sy(c))}h12M{_f(sx(c))} {_f(sy(c) - 6)}v12" stroke="{color}" stroke-width="3">'
            f"<title>{escape(name)} centroid</title></path>"
        )
    body += _legend(list(points), size - 70, 22)
    return _svg(size, size, body, title)


def thin_sorted(values: np.ndarray, limit: int = 5000, keep: int = 1000) -> np.ndarray:
    """Quantile-thin a sorted array for plotting when it exceeds ``limit`` points."""
    if len(values) <= limit:
        return values
    idx = np.unique(np.round(np.linspace(0, len(values) - 1, keep)).astype(int))
    return values[idx]


def cdf_chart(curves: dict[str, np.ndarray], title: str = "", width: int = 420, height: int = 240) -> str:
    left, right, top, bottom = 36, 10, 22, 28
    pw, ph = width - left - right, height - top - bottom
    xmax = max((float(c[-1]) for c in curves.values() if len(c)), default=1.0) or 1.0
    body = [
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="#333"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="#333"/>',
        f'<text x="{left + pw}" y="{height - 6}" text-anchor="end" {FONT}>{xmax:.3f}</text>',
        f'<text x="{left - 3}" y="{top + 4}" text-anchor="end" {FONT}>1</text>',
    ]
    for name, vals in curves.items():
        plot = thin_sorted(np.asarray(vals))
        n = len(plot)
        if n == 0:
            continue
        pts = " ".join(f"{_f(left + v / xmax * pw)},{_f(top + ph - (k + 1) / n * ph)}" for k, v in enumerate(plot))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{COLORS.get(name, "#444")}" stroke-width="1.5"/>')
    body += _legend(list(curves), width - right - 80, top + 4)
    return _svg(width, height, body, title)
