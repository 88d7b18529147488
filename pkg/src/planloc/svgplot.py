"""Dependency-free SVG emission for diagnostic plots.

SVG keeps plots diffable in tests and avoids raster plotting dependencies.
Each document embeds a comment carrying the tool version and the effective
configuration of the command that produced it.
"""

from __future__ import annotations

import math

import numpy as np

from . import __version__
from .raycast import RadialDescriptor


def svg_document(width: float, height: float, body: list[str],
                 comment: str = "") -> str:
    head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
            f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">']
    head.append(f"<!-- planloc {__version__} {comment} -->")
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _gray(value: float) -> str:
    v = int(round(255 * (1.0 - min(max(value, 0.0), 1.0))))
    return f"rgb({v},{v},{v})"


def descriptor_svg(d: RadialDescriptor, r_max: float = 30.0,
                   comment: str = "") -> str:
    """Five stacked channel strips plus a polar range plot."""
    n = d.n_bins
    strip_h = 26
    gap = 6
    plot_r = 130.0
    width = max(n, 2 * plot_r + 20)
    body = []
    for c in range(d.channels.shape[0]):
        y = c * (strip_h + gap)
        tag = "" if d.active[c] else " (inactive)"
        body.append(f'<text x="2" y="{y + 12}" font-size="10" fill="#c33">'
                    f"ch{c}{tag}</text>")
        for j in range(n):
            x = j * width / n
            body.append(f'<rect x="{x:.1f}" y="{y}" width="{width / n:.2f}" '
                        f'height="{strip_h}" fill="{_gray(float(d.channels[c, j]))}"/>')
    cy = 5 * (strip_h + gap) + plot_r + 10
    cx = width / 2.0
    pts = []
    for j in range(n):
        ang = 2.0 * math.pi * j / n
        r = plot_r * float(d.channels[0, j])
        pts.append(f"{cx + r * math.cos(ang):.1f},{cy - r * math.sin(ang):.1f}")
    body.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{plot_r}" fill="none" '
                'stroke="#ccc"/>')
    body.append('<polyline points="' + " ".join(pts) +
                '" fill="none" stroke="blue" stroke-width="1"/>')
    return svg_document(width, cy + plot_r + 10, body, comment)


def overlay_svg(image_shape: tuple[int, int], segments, window_segment_ids,
                detections, band=None, comment: str = "") -> str:
    """Detection overlay: segments green, window-associated segments red,
    detection boxes blue, band dashed."""
    h, w = image_shape
    body = [f'<rect x="0" y="0" width="{w}" height="{h}" fill="#222"/>']
    if band is not None:
        body.append(f'<rect x="0" y="{band.y_top}" width="{w}" '
                    f'height="{band.y_bot - band.y_top + 1}" fill="none" '
                    'stroke="#888" stroke-dasharray="6,4"/>')
    for i, s in enumerate(segments):
        color = "red" if i in window_segment_ids else "green"
        body.append(f'<line x1="{s.x1:.1f}" y1="{s.y1:.1f}" x2="{s.x2:.1f}" '
                    f'y2="{s.y2:.1f}" stroke="{color}" stroke-width="1.5"/>')
    for det in detections:
        body.append(f'<rect x="{det.b_x:.1f}" y="{det.b_y:.1f}" width="{det.b_w:.1f}" '
                    f'height="{det.b_h:.1f}" fill="none" stroke="#4af" '
                    'stroke-width="2"/>')
    return svg_document(w, h, body, comment)


def sphere_svg(circles, vps, comment: str = "", radius: float = 220.0) -> str:
    """Orthographic z-hemisphere projection of great circles and VPs."""
    size = 2 * radius + 20
    cx = cy = size / 2.0
    body = [f'<circle cx="{cx}" cy="{cy}" r="{radius}" fill="#fafafa" stroke="#999"/>']
    ts = np.linspace(0.0, 2.0 * math.pi, 181)
    for gc in circles:
        n = gc.normal
        a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        u = np.cross(n, a)
        u /= np.linalg.norm(u)
        v = np.cross(n, u)
        pts = np.outer(np.cos(ts), u) + np.outer(np.sin(ts), v)
        vis = pts[pts[:, 2] > 0.0]
        if vis.shape[0] < 2:
            continue
        path = " ".join(f"{cx + radius * p[0]:.1f},{cy + radius * p[1]:.1f}" for p in vis)
        body.append(f'<polyline points="{path}" fill="none" stroke="#7a7" '
                    'stroke-width="0.6"/>')
    colors = ["blue", "green", "orange", "purple"]
    for i, vp in enumerate(vps):
        dvec = vp.direction if vp.direction[2] >= 0 else -vp.direction
        x = cx + radius * float(dvec[0])
        y = cy + radius * float(dvec[1])
        color = colors[i % len(colors)]
        body.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="6" fill="{color}"/>')
        body.append(f'<text x="{x + 8:.1f}" y="{y + 4:.1f}" font-size="11" '
                    f'fill="{color}">{vp.inlier_count}</text>')
    return svg_document(size, size, body, comment)
