"""Floor plan rasters: binary wall/window masks with a metric world<->pixel mapping.

Coordinate conventions used throughout the package:

* ``origin`` is the world position (meters) of the top-left corner of
  pixel (row 0, col 0).
* World +x maps to increasing column index, world +y maps to *decreasing*
  row index (plans are drawn with north up, rasters store rows top-down).
  The flip happens only here, never in downstream loops.
* ``world_to_pixel`` returns fractional ``(col, row)``; the pixel that
  contains a point is ``(floor(col), floor(row))``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

RGB = np.ndarray  # (H, W, 3) uint8
ColorRule = Callable[[RGB], np.ndarray]  # -> (H, W) bool


class FloorPlanError(ValueError):
    """Raised for unreadable, empty, or inconsistently configured plans."""


def default_window_rule(rgb: RGB) -> np.ndarray:
    """Glazing pixels: strongly red-dominant (R > 150, R > 1.5G, R > 1.5B)."""
    r = rgb[..., 0].astype(np.int32)
    g = rgb[..., 1].astype(np.int32)
    b = rgb[..., 2].astype(np.int32)
    return (r > 150) & (2 * r > 3 * g) & (2 * r > 3 * b)


def default_wall_rule(rgb: RGB) -> np.ndarray:
    """Wall pixels: dark (luminance < 100 of 255) and not classified as window."""
    lum = (0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2])
    return (lum < 100.0) & ~default_window_rule(rgb)


@dataclass(frozen=True)
class Pose2D:
    """Planar pose: position in meters, heading ``psi`` in radians [0, 2pi)."""

    x: float
    y: float
    psi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "psi", float(self.psi) % (2.0 * np.pi))


@dataclass(frozen=True)
class FloorPlanRaster:
    """Two aligned binary masks plus the metric mapping.

    A pixel may be set in both masks; classification resolves window
    before wall (glazing is drawn over wall lines).
    """

    wall_mask: np.ndarray    # (H, W) bool
    window_mask: np.ndarray  # (H, W) bool
    resolution: float        # meters per pixel
    origin: tuple[float, float]  # world coords of the corner of pixel (0, 0)

    def __post_init__(self):
        if self.wall_mask.shape != self.window_mask.shape:
            raise FloorPlanError(
                f"mask shapes differ: {self.wall_mask.shape} vs {self.window_mask.shape}")
        if self.wall_mask.ndim != 2 or self.wall_mask.size == 0:
            raise FloorPlanError("masks must be non-empty 2D grids")
        if not self.resolution > 0:
            raise FloorPlanError(f"resolution must be positive, got {self.resolution}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        self.wall_mask.setflags(write=False)
        self.window_mask.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.wall_mask.shape

    @property
    def structure_mask(self) -> np.ndarray:
        """Union of wall and window pixels."""
        return self.wall_mask | self.window_mask

    def class_map(self) -> np.ndarray:
        """Per-pixel class (0 open, 1 wall, 2 window), window precedence.

        Computed once and cached; the masks are immutable after load.
        """
        cached = self.__dict__.get("_class_map")
        if cached is None:
            cached = np.where(self.window_mask, np.int8(2),
                              np.where(self.wall_mask, np.int8(1), np.int8(0)))
            cached.setflags(write=False)
            object.__setattr__(self, "_class_map", cached)
        return cached

    def world_bounds(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) of the raster footprint in meters."""
        h, w = self.shape
        ox, oy = self.origin
        return ox, oy - h * self.resolution, ox + w * self.resolution, oy

    def world_to_pixel(self, x: float, y: float) -> tuple[float, float]:
        """World point (m) -> fractional (col, row). Out-of-bounds is legal."""
        ox, oy = self.origin
        return (x - ox) / self.resolution, (oy - y) / self.resolution

    def pixel_to_world(self, col: float, row: float) -> tuple[float, float]:
        """Inverse of :meth:`world_to_pixel` (fractional pixels accepted)."""
        ox, oy = self.origin
        return ox + col * self.resolution, oy - row * self.resolution

    def classify_pixel(self, col: int, row: int) -> int:
        """0 = open, 1 = wall, 2 = window; out-of-raster pixels are open."""
        h, w = self.shape
        if not (0 <= row < h and 0 <= col < w):
            return 0
        if self.window_mask[row, col]:
            return 2
        if self.wall_mask[row, col]:
            return 1
        return 0


def load_floorplan(image_path: str | Path,
                   resolution: float,
                   origin: tuple[float, float],
                   wall_rule: ColorRule = default_wall_rule,
                   window_rule: ColorRule = default_window_rule) -> FloorPlanRaster:
    """Decode a lossless raster plan and classify every pixel.

    Window classification is independent of the wall rule; the default wall
    rule already excludes window pixels. Decoding is deterministic: the same
    file always yields bit-identical masks.
    """
    if not resolution > 0:
        raise FloorPlanError(f"resolution must be positive, got {resolution}")
    path = Path(image_path)
    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"))
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise FloorPlanError(f"cannot decode image {path}: {exc}") from exc
    if rgb.size == 0:
        raise FloorPlanError(f"zero-area image: {path}")
    window = np.ascontiguousarray(window_rule(rgb).astype(bool))
    wall = np.ascontiguousarray(wall_rule(rgb).astype(bool))
    return FloorPlanRaster(wall_mask=wall, window_mask=window,
                           resolution=float(resolution),
                           origin=(float(origin[0]), float(origin[1])))


def load_plan_with_sidecar(image_path: str | Path,
                           meta_path: str | Path | None = None) -> FloorPlanRaster:
    """Load a plan image plus its JSON sidecar carrying resolution and origin.

    The sidecar defaults to ``<image>.json``. Required keys: ``resolution``
    (m/pixel) and ``origin`` ([x, y] world meters of pixel (0,0)).
    """
    image_path = Path(image_path)
    meta_path = Path(meta_path) if meta_path is not None else image_path.with_suffix(
        image_path.suffix + ".json")
    with open(meta_path) as fh:
        meta = json.load(fh)
    try:
        resolution = float(meta["resolution"])
        origin = (float(meta["origin"][0]), float(meta["origin"][1]))
    except (KeyError, TypeError, IndexError) as exc:
        raise FloorPlanError(f"sidecar {meta_path} missing resolution/origin") from exc
    return load_floorplan(image_path, resolution, origin)


def save_plan_png(raster: FloorPlanRaster, image_path: str | Path,
                  meta_path: str | Path | None = None) -> None:
    """Write the raster as a PNG (white free, black wall, red glazing) + sidecar."""
    image_path = Path(image_path)
    h, w = raster.shape
    rgb = np.full((h, w, 3), 255, dtype=np.uint8)
    rgb[raster.wall_mask] = (0, 0, 0)
    rgb[raster.window_mask] = (220, 0, 0)
    Image.fromarray(rgb).save(image_path, format="PNG")
    meta_path = Path(meta_path) if meta_path is not None else image_path.with_suffix(
        image_path.suffix + ".json")
    meta = {"resolution": raster.resolution, "origin": list(raster.origin)}
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
