"""Shared synthetic constructions for the test suite."""

from __future__ import annotations

import math

import numpy as np

from planloc.fisheye import CameraModel, project
from planloc.floorplan import FloorPlanRaster
from planloc.segments import LineSegment


def square_room(size_m: float = 10.0, resolution: float = 0.05,
                wall_px: int = 1, window_rows: tuple[int, int] | None = None,
                window_cols: tuple[int, int] | None = None) -> FloorPlanRaster:
    """Square room with perimeter walls; origin puts the room at [0, size]^2.

    ``window_rows`` paints glazing on the east wall over those raster rows;
    ``window_cols`` paints the north wall over those columns.
    """
    n = int(round(size_m / resolution))
    wall = np.zeros((n, n), dtype=bool)
    window = np.zeros_like(wall)
    wall[:wall_px, :] = wall[-wall_px:, :] = True
    wall[:, :wall_px] = wall[:, -wall_px:] = True
    if window_rows is not None:
        window[window_rows[0]:window_rows[1], -wall_px:] = True
    if window_cols is not None:
        window[:wall_px, window_cols[0]:window_cols[1]] = True
    return FloorPlanRaster(wall_mask=wall, window_mask=window,
                           resolution=resolution, origin=(0.0, size_m))


def ray_rect_entry(origin: tuple[float, float], bearing: float,
                   rect: tuple[float, float, float, float]) -> float | None:
    """Exact distance at which a ray enters an axis-aligned rectangle.

    ``rect`` is (x0, y0, x1, y1); returns None when the ray misses.
    Serves as the analytic oracle for ray marching against painted walls.
    """
    dx, dy = math.cos(bearing), math.sin(bearing)
    x0, y0, x1, y1 = rect
    t0, t1 = 0.0, math.inf
    for p, d, lo, hi in ((origin[0], dx, x0, x1), (origin[1], dy, y0, y1)):
        if abs(d) < 1e-15:
            if not lo <= p <= hi:
                return None
            continue
        ta, tb = (lo - p) / d, (hi - p) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
    if t0 > t1:
        return None
    return t0


def scalar_march(raster: FloorPlanRaster, origin: tuple[float, float],
                 dir_x: float, dir_y: float, r_max: float,
                 step: float) -> tuple[float, int]:
    """Pure-Python reference marcher (independent of the vectorized kernel).

    Identical sampling semantics: radii k*step strictly inside (0, r_max),
    window checked before wall, out-of-raster samples are open.
    """
    n_steps = int(math.floor(r_max / step))
    while n_steps > 0 and n_steps * step >= r_max:
        n_steps -= 1
    h, w = raster.shape
    ox, oy = raster.origin
    inv = 1.0 / raster.resolution
    for k in range(1, n_steps + 1):
        r = k * step
        col = math.floor((origin[0] + dir_x * r - ox) * inv)
        row = math.floor((oy - (origin[1] + dir_y * r)) * inv)
        if 0 <= row < h and 0 <= col < w:
            if raster.window_mask[row, col]:
                return r, 2
            if raster.wall_mask[row, col]:
                return r, 1
    return r_max, 0


DEFAULT_CAM = CameraModel(focal=440.0, cx=736.0, cy=720.0, width=1472, height=1440)


def vertical_line_segments(cam: CameraModel, gravity: np.ndarray, count: int,
                           rng: np.random.Generator,
                           min_px: float = 15.0) -> list[LineSegment]:
    """Project 3D lines parallel to ``gravity`` into the camera."""
    segments = []
    while len(segments) < count:
        u = rng.normal(size=3)
        u[2] = abs(u[2]) + 0.6
        u /= np.linalg.norm(u)
        anchor = u * rng.uniform(2.0, 8.0)
        t1, t2 = rng.uniform(-1.2, 1.2, 2)
        if abs(t1 - t2) < 0.3:
            continue
        p1 = anchor + t1 * gravity
        p2 = anchor + t2 * gravity
        try:
            u1, v1 = project(cam, p1 / np.linalg.norm(p1))
            u2, v2 = project(cam, p2 / np.linalg.norm(p2))
        except ValueError:
            continue
        if not (0 <= u1 < cam.width and 0 <= v1 < cam.height
                and 0 <= u2 < cam.width and 0 <= v2 < cam.height):
            continue
        if math.hypot(u1 - u2, v1 - v2) < min_px:
            continue
        segments.append(LineSegment(u1, v1, u2, v2))
    return segments


def random_segments(cam: CameraModel, count: int,
                    rng: np.random.Generator) -> list[LineSegment]:
    """Clutter segments between random in-image pixels."""
    segments = []
    while len(segments) < count:
        ax, bx = rng.uniform(100, cam.width - 100, 2)
        ay, by = rng.uniform(100, cam.height - 100, 2)
        if math.hypot(ax - bx, ay - by) < 30:
            continue
        segments.append(LineSegment(ax, ay, bx, by))
    return segments
