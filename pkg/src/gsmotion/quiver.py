"""SVG quiver plots of per-kernel motion fields.

Arrows are drawn in pixel coordinates (viewBox matches the raster) from each
kernel center to center + displacement * arrow_scale, with a dot at the
center. Output is deterministic: fixed float formatting, no timestamps.
"""

import numpy as np

_HEADER = (
    '<?xml version="1.0" encoding="UTF-8"?>\n'
    '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
    'width="{disp_w}" height="{disp_h}" viewBox="0 0 {w} {h}" '
    'data-arrow-scale="{scale}">\n'
)


def _fmt(value: float) -> str:
    return f"{value:.4f}".rstrip("0").rstrip(".")


def quiver_svg(positions, vectors, width, height, arrow_scale=500.0, display_zoom=4) -> str:
    """Render a quiver plot to an SVG 1.1 string (one arrow per kernel)."""
    positions = np.asarray(positions, dtype=np.float64)
    vectors = np.asarray(vectors, dtype=np.float64)
    if positions.shape != vectors.shape or positions.ndim != 2 or positions.shape[1] != 2:
        raise ValueError(
            f"positions and vectors must both have shape (n, 2), got "
            f"{positions.shape} and {vectors.shape}"
        )

    parts = [
        _HEADER.format(
            disp_w=int(width * display_zoom),
            disp_h=int(height * display_zoom),
            w=width,
            h=height,
            scale=_fmt(arrow_scale),
        ),
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n',
        '<defs><marker id="tip" viewBox="0 0 4 4" refX="3" refY="2" '
        'markerWidth="4" markerHeight="4" orient="auto">'
        '<path d="M 0 0 L 4 2 L 0 4 z" fill="crimson"/></marker></defs>\n',
    ]
    for (px, py), (vx, vy) in zip(positions, vectors):
        tip_x, tip_y = px + vx * arrow_scale, py + vy * arrow_scale
        parts.append(
            f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="0.6" fill="steelblue"/>\n'
        )
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(py)}" x2="{_fmt(tip_x)}" y2="{_fmt(tip_y)}" '
            'stroke="crimson" stroke-width="0.35" marker-end="url(#tip)"/>\n'
        )
    parts.append("</svg>\n")
    return "".join(parts)


def write_quiver_svg(path, positions, vectors, width, height, arrow_scale=500.0) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(quiver_svg(positions, vectors, width, height, arrow_scale=arrow_scale))


def flow_quiver_svg(flow, arrow_scale=500.0, stride=8) -> str:
    """Quiver plot of a dense flow field, subsampled on a regular grid."""
    height, width = flow.shape
    ys = np.arange(stride // 2, height, stride)
    xs = np.arange(stride // 2, width, stride)
    gx, gy = np.meshgrid(xs, ys)
    keep = flow.valid[gy, gx]
    positions = np.stack([gx[keep], gy[keep]], axis=1).astype(np.float64)
    vectors = np.stack([flow.u[gy, gx][keep], flow.v[gy, gx][keep]], axis=1)
    return quiver_svg(positions, vectors, width, height, arrow_scale=arrow_scale)
