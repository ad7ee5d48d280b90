"""Phase-plane SVG rendering of emulation trajectories.

Deterministic byte output: fixed palette, fixed coordinate formatting, no
timestamps.  Only the first two state coordinates are drawn.
"""

from __future__ import annotations

import numpy as np

REF_STROKE = "#999999"
PALETTE = ("#c0392b", "#2980b9", "#27ae60", "#8e44ad",
           "#d35400", "#16a085", "#7f8c8d", "#f39c12")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def phase_portrait_svg(series: list[tuple[np.ndarray, np.ndarray]],
                       bounds: tuple[float, float, float, float] | None = None,
                       size: tuple[int, int] = (480, 480)) -> str:
    """Render (reference, quantized) state-history pairs as SVG polylines.

    Each pair contributes two polylines: the reference dashed in gray, the
    quantized trajectory solid in a per-run palette color.  bounds is
    (xmin, xmax, ymin, ymax); when omitted it is fitted to the data with 5%
    padding.
    """
    if not series:
        raise ValueError("no trajectories to plot")
    pairs = []
    for ref, quant in series:
        ref = np.asarray(ref, dtype=float)
        quant = np.asarray(quant, dtype=float)
        if ref.ndim != 2 or quant.ndim != 2 or ref.shape[1] < 2 or quant.shape[1] < 2:
            raise ValueError("each trajectory needs at least two state columns")
        if ref.shape[0] < 2 or quant.shape[0] < 2:
            raise ValueError("each trajectory needs at least two points")
        pairs.append((ref[:, :2], quant[:, :2]))

    if bounds is None:
        stacked = np.vstack([arr for pair in pairs for arr in pair])
        xmin, ymin = stacked.min(axis=0)
        xmax, ymax = stacked.max(axis=0)
        pad_x = 0.05 * max(xmax - xmin, 1e-9)
        pad_y = 0.05 * max(ymax - ymin, 1e-9)
        bounds = (xmin - pad_x, xmax + pad_x, ymin - pad_y, ymax + pad_y)
    xmin, xmax, ymin, ymax = (float(b) for b in bounds)
    if xmax <= xmin or ymax <= ymin:
        raise ValueError("bounds must have positive extent")

    width, height = size
    margin = 10.0

    def to_px(points: np.ndarray) -> np.ndarray:
        px = margin + (points[:, 0] - xmin) / (xmax - xmin) * (width - 2 * margin)
        py = height - margin - (points[:, 1] - ymin) / (ymax - ymin) * (height - 2 * margin)
        return np.column_stack([px, py])

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="#ffffff"/>']
    # axes through the origin, when visible
    if xmin < 0 < xmax:
        x0 = to_px(np.array([[0.0, ymin], [0.0, ymax]]))
        parts.append(f'<line x1="{_fmt(x0[0, 0])}" y1="{_fmt(x0[0, 1])}" '
                     f'x2="{_fmt(x0[1, 0])}" y2="{_fmt(x0[1, 1])}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
    if ymin < 0 < ymax:
        y0 = to_px(np.array([[xmin, 0.0], [xmax, 0.0]]))
        parts.append(f'<line x1="{_fmt(y0[0, 0])}" y1="{_fmt(y0[0, 1])}" '
                     f'x2="{_fmt(y0[1, 0])}" y2="{_fmt(y0[1, 1])}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
    for i, (ref, quant) in enumerate(pairs):
        ref_pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in to_px(ref))
        parts.append(f'<polyline points="{ref_pts}" fill="none" '
                     f'stroke="{REF_STROKE}" stroke-width="1.5" stroke-dasharray="5 4"/>')
    for i, (ref, quant) in enumerate(pairs):
        color = PALETTE[i % len(PALETTE)]
        q_pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in to_px(quant))
        parts.append(f'<polyline points="{q_pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
