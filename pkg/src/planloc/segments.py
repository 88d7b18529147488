"""Line segment detection by gradient-anchor edge tracing.

A deliberately simple edge-drawing detector: Sobel gradients pick anchor
pixels (local maxima across the edge direction), chains grow from each
anchor along the edge, and chains are split into straight segments by an
incremental least-squares fit. Everything is deterministic for a fixed
input, and segments can also be imported from CSV so any external
detector can drive the downstream stages.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class LineSegment:
    x1: float
    y1: float
    x2: float
    y2: float
    length: float = field(init=False)
    angle_from_horizontal: float = field(init=False)  # radians in [0, pi/2]

    def __post_init__(self):
        dx = self.x2 - self.x1
        dy = self.y2 - self.y1
        length = math.hypot(dx, dy)
        if length <= 0:
            raise ValueError("segment endpoints coincide")
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "angle_from_horizontal", math.atan2(abs(dy), abs(dx)))

    @property
    def mid_x(self) -> float:
        return 0.5 * (self.x1 + self.x2)

    @property
    def mid_y(self) -> float:
        return 0.5 * (self.y1 + self.y2)

    @property
    def y_min(self) -> float:
        return min(self.y1, self.y2)

    @property
    def y_max(self) -> float:
        return max(self.y1, self.y2)


class _LineFit:
    """Running least-squares line through 2D points (principal axis)."""

    __slots__ = ("n", "sx", "sy", "sxx", "syy", "sxy")

    def __init__(self):
        self.n = 0
        self.sx = self.sy = self.sxx = self.syy = self.sxy = 0.0

    def add(self, x: float, y: float) -> None:
        self.n += 1
        self.sx += x
        self.sy += y
        self.sxx += x * x
        self.syy += y * y
        self.sxy += x * y

    def line(self) -> tuple[float, float, float, float]:
        """(centroid_x, centroid_y, dir_x, dir_y) of the fitted line."""
        mx = self.sx / self.n
        my = self.sy / self.n
        cxx = self.sxx / self.n - mx * mx
        cyy = self.syy / self.n - my * my
        cxy = self.sxy / self.n - mx * my
        ang = 0.5 * math.atan2(2.0 * cxy, cxx - cyy)
        return mx, my, math.cos(ang), math.sin(ang)

    def deviation(self, x: float, y: float) -> float:
        if self.n < 2:
            return 0.0
        mx, my, dx, dy = self.line()
        return abs(dx * (y - my) - dy * (x - mx))


def _fit_chain(chain: list[tuple[int, int]], tol: float,
               min_length: float) -> list[LineSegment]:
    """Split a pixel chain into straight segments via least-squares fits."""
    segments = []
    i = 0
    while i < len(chain):
        fit = _LineFit()
        j = i
        while j < len(chain):
            r, c = chain[j]
            if fit.n >= 4 and fit.deviation(c, r) > tol:
                break
            fit.add(c, r)
            j += 1
        if fit.n >= 2:
            mx, my, dx, dy = fit.line()
            t0 = (chain[i][1] - mx) * dx + (chain[i][0] - my) * dy
            t1 = (chain[j - 1][1] - mx) * dx + (chain[j - 1][0] - my) * dy
            if abs(t1 - t0) >= min_length:
                segments.append(LineSegment(x1=mx + t0 * dx, y1=my + t0 * dy,
                                            x2=mx + t1 * dx, y2=my + t1 * dy))
        i = j if j > i else i + 1
    return segments


_VERT, _HOR = 0, 1  # edge orientation: vertical edges have |gx| >= |gy|


def _mark_visited(r: int, c: int, cur_orient: int, visited: np.ndarray) -> None:
    """Mark a chain pixel and thin: block its across-edge neighbors so the
    parallel twin response of the same edge is not traced again."""
    h, w = visited.shape
    visited[r, c] = True
    if cur_orient == _VERT:
        for cc in (c - 1, c + 1):
            if 0 <= cc < w:
                visited[r, cc] = True
    else:
        for rr in (r - 1, r + 1):
            if 0 <= rr < h:
                visited[rr, c] = True


def _walk(r: int, c: int, sign: int, grad: np.ndarray, orient: np.ndarray,
          strong: np.ndarray, visited: np.ndarray) -> list[tuple[int, int]]:
    """Trace one direction from (r, c); marks pixels visited as it goes."""
    h, w = grad.shape
    path = []
    cur_orient = orient[r, c]
    while True:
        if cur_orient == _VERT:
            nr = r + sign
            if not 0 <= nr < h:
                break
            cands = [(nr, c + dc) for dc in (-1, 0, 1) if 0 <= c + dc < w]
        else:
            nc = c + sign
            if not 0 <= nc < w:
                break
            cands = [(r + dr, nc) for dr in (-1, 0, 1) if 0 <= r + dr < h]
        cands = [(rr, cc) for rr, cc in cands if strong[rr, cc] and not visited[rr, cc]]
        if not cands:
            break
        r, c = max(cands, key=lambda p: grad[p])
        if orient[r, c] != cur_orient:
            break
        _mark_visited(r, c, cur_orient, visited)
        path.append((r, c))
    return path


def detect_segments(image: np.ndarray, min_length: float = 12.0,
                    gradient_threshold: float = 30.0, blur_sigma: float = 1.0,
                    anchor_margin: float = 4.0,
                    fit_tolerance: float = 1.5) -> list[LineSegment]:
    """Detect straight edge segments in a grayscale image.

    ``gradient_threshold`` applies to |gx|+|gy| of the Sobel response on
    the smoothed image; ``anchor_margin`` is the local-maximum margin
    across the edge required of anchor pixels.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("expected a non-empty 2D grayscale image")
    if blur_sigma > 0:
        img = ndimage.gaussian_filter(img, blur_sigma, mode="nearest")
    gx = ndimage.sobel(img, axis=1, mode="nearest")
    gy = ndimage.sobel(img, axis=0, mode="nearest")
    grad = np.abs(gx) + np.abs(gy)
    orient = np.where(np.abs(gx) >= np.abs(gy), _VERT, _HOR).astype(np.int8)
    strong = grad >= gradient_threshold

    # Anchor: strong pixel that beats one across-edge neighbor by the margin
    # and is not below the other (plateaus from clean step edges count).
    left = np.roll(grad, 1, axis=1)
    right = np.roll(grad, -1, axis=1)
    up = np.roll(grad, 1, axis=0)
    down = np.roll(grad, -1, axis=0)
    vert_anchor = ((grad - left >= anchor_margin) & (grad >= right)) | \
                  ((grad - right >= anchor_margin) & (grad >= left))
    hor_anchor = ((grad - up >= anchor_margin) & (grad >= down)) | \
                 ((grad - down >= anchor_margin) & (grad >= up))
    anchor = strong & np.where(orient == _VERT, vert_anchor, hor_anchor)
    anchor[0, :] = anchor[-1, :] = False
    anchor[:, 0] = anchor[:, -1] = False

    ar, ac = np.nonzero(anchor)
    if ar.size == 0:
        return []
    order = np.lexsort((ac, ar, -grad[ar, ac]))
    visited = np.zeros_like(strong)

    segments = []
    for k in order:
        r, c = int(ar[k]), int(ac[k])
        if visited[r, c]:
            continue
        _mark_visited(r, c, int(orient[r, c]), visited)
        back = _walk(r, c, -1, grad, orient, strong, visited)
        fwd = _walk(r, c, +1, grad, orient, strong, visited)
        chain = back[::-1] + [(r, c)] + fwd
        if len(chain) >= 2:
            segments.extend(_fit_chain(chain, fit_tolerance, min_length))
    return segments


def save_segments_csv(segments: list[LineSegment], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "y1", "x2", "y2"])
        for s in segments:
            writer.writerow([f"{s.x1:.3f}", f"{s.y1:.3f}", f"{s.x2:.3f}", f"{s.y2:.3f}"])


def load_segments_csv(path: str | Path) -> list[LineSegment]:
    segments = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            segments.append(LineSegment(x1=float(row["x1"]), y1=float(row["y1"]),
                                        x2=float(row["x2"]), y2=float(row["y2"])))
    return segments
