"""Descriptor databases over free-space candidate grids, plus file I/O.

Binary container (shared by databases and single-descriptor query files):

    bytes 0..3    magic b"RDDB"
    bytes 4..7    uint32 LE: length of the JSON header
    ...           UTF-8 JSON header {format_version, kind, n_bins,
                  n_channels, count, yaw_anchor, grid_step, active_channels,
                  raycast{...}, tool_version, extra{...}}
    records       per candidate, little-endian:
                  float64 cell_x, float64 cell_y, uint32 transition_count,
                  n_channels * n_bins float32 (channel-major)

A JSON-text export of the same content exists for debugging.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import ndimage

from . import __version__
from .floorplan import FloorPlanRaster, Pose2D
from .raycast import (N_CHANNELS, RadialDescriptor, RaycastConfig, cast_pose,
                      channels_from_ranges, transitions_of_labels)

MAGIC = b"RDDB"
FORMAT_VERSION = 1


class EmptyDatabaseError(ValueError):
    """No candidate cells passed the free-space predicate."""


class DatabaseFormatError(ValueError):
    """File is not a valid descriptor container."""


@dataclass
class DescriptorDatabase:
    """Floor-plan descriptors at a fixed yaw anchor over grid cell centers."""

    cells: np.ndarray              # (M, 2) float64 world coordinates
    channels: np.ndarray           # (M, C, n_bins) float
    transition_counts: np.ndarray  # (M,) int64
    yaw_anchor: float
    grid_step: float
    cfg: RaycastConfig
    active: tuple[bool, ...] = (True,) * N_CHANNELS

    def __len__(self) -> int:
        return self.cells.shape[0]

    @property
    def n_bins(self) -> int:
        return self.channels.shape[2]

    def descriptor(self, index: int) -> RadialDescriptor:
        return RadialDescriptor(channels=np.asarray(self.channels[index], dtype=float),
                                transition_count=int(self.transition_counts[index]),
                                active=self.active)


def default_free_space_predicate(raster: FloorPlanRaster,
                                 clearance: float = 0.3) -> Callable[[float, float], bool]:
    """Candidate test: off-structure and at least ``clearance`` meters away.

    Distances are measured between pixel centers via a Euclidean distance
    transform of the structure mask.
    """
    structure = raster.structure_mask
    dist_px = ndimage.distance_transform_edt(~structure)
    h, w = raster.shape

    def predicate(x: float, y: float) -> bool:
        col_f, row_f = raster.world_to_pixel(x, y)
        col, row = int(np.floor(col_f)), int(np.floor(row_f))
        if not (0 <= row < h and 0 <= col < w):
            return False
        if structure[row, col]:
            return False
        return dist_px[row, col] * raster.resolution >= clearance

    return predicate


def grid_cells(raster: FloorPlanRaster, grid_step: float) -> np.ndarray:
    """Cell centers covering the raster footprint, row-major from the top-left."""
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    x0, y0, x1, y1 = raster.world_bounds()
    nx = int(np.floor((x1 - x0) / grid_step + 1e-9))
    ny = int(np.floor((y1 - y0) / grid_step + 1e-9))
    nx, ny = max(nx, 1), max(ny, 1)
    xs = x0 + (np.arange(nx) + 0.5) * grid_step
    ys = y1 - (np.arange(ny) + 0.5) * grid_step
    # a step beyond the plan extent degenerates to the single central cell
    if grid_step > x1 - x0:
        xs = np.array([0.5 * (x0 + x1)])
    if grid_step > y1 - y0:
        ys = np.array([0.5 * (y0 + y1)])
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def build_database(raster: FloorPlanRaster, grid_step: float,
                   cfg: RaycastConfig, yaw_anchor: float = 0.0,
                   free_space_predicate: Callable[[float, float], bool] | None = None,
                   clearance: float = 0.3) -> DescriptorDatabase:
    """Compute descriptors at every free grid cell, in deterministic order."""
    if free_space_predicate is None:
        free_space_predicate = default_free_space_predicate(raster, clearance)
    centers = grid_cells(raster, grid_step)
    keep = [i for i in range(centers.shape[0])
            if free_space_predicate(float(centers[i, 0]), float(centers[i, 1]))]
    if not keep:
        raise EmptyDatabaseError(
            f"no free-space candidates on a {grid_step} m grid (of {centers.shape[0]} cells)")
    cells = centers[keep]
    m = cells.shape[0]
    channels = np.empty((m, N_CHANNELS, cfg.n_bins))
    transitions = np.empty(m, dtype=np.int64)
    for i in range(m):
        pose = Pose2D(float(cells[i, 0]), float(cells[i, 1]), yaw_anchor)
        ranges, hits = cast_pose(raster, pose, cfg)
        channels[i] = channels_from_ranges(ranges, hits, cfg)
        transitions[i] = transitions_of_labels(hits)
    return DescriptorDatabase(cells=cells, channels=channels,
                              transition_counts=transitions,
                              yaw_anchor=float(yaw_anchor), grid_step=float(grid_step),
                              cfg=cfg)


def _header_dict(kind: str, n_bins: int, count: int, yaw_anchor: float,
                 grid_step: float, active: tuple[bool, ...],
                 cfg: RaycastConfig | None, extra: dict | None) -> dict:
    header = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "n_bins": n_bins,
        "n_channels": N_CHANNELS,
        "count": count,
        "yaw_anchor": yaw_anchor,
        "grid_step": grid_step,
        "active_channels": [bool(a) for a in active],
        "tool_version": __version__,
    }
    if cfg is not None:
        header["raycast"] = {
            "n_bins": cfg.n_bins, "r_max": cfg.r_max, "step": cfg.step,
            "r_clip": cfg.r_clip, "sigma_clip": cfg.sigma_clip,
            "var_halfwidth": cfg.var_halfwidth,
        }
    if extra:
        header["extra"] = extra
    return header


def _write_container(path: Path, header: dict, cells: np.ndarray,
                     transitions: np.ndarray, channels: np.ndarray) -> None:
    rec_float = channels.astype("<f4")
    with open(path, "wb") as fh:
        blob = json.dumps(header, sort_keys=True).encode()
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for i in range(channels.shape[0]):
            fh.write(struct.pack("<ddI", float(cells[i, 0]), float(cells[i, 1]),
                                 int(transitions[i])))
            fh.write(rec_float[i].tobytes(order="C"))


def save_database(db: DescriptorDatabase, path: str | Path,
                  extra: dict | None = None) -> None:
    path = Path(path)
    header = _header_dict("database", db.n_bins, len(db), db.yaw_anchor,
                          db.grid_step, db.active, db.cfg, extra)
    _write_container(path, header, db.cells, db.transition_counts, db.channels)


def save_query_descriptor(d: RadialDescriptor, path: str | Path,
                          pose_xy: tuple[float, float] = (0.0, 0.0),
                          cfg: RaycastConfig | None = None,
                          extra: dict | None = None) -> None:
    """Write a single descriptor in the shared container format."""
    path = Path(path)
    header = _header_dict("query", d.n_bins, 1, 0.0, 0.0, d.active, cfg, extra)
    _write_container(path, header,
                     np.asarray([pose_xy], dtype=float),
                     np.asarray([d.transition_count]),
                     d.channels[None, :, :])


def _read_container(path: Path) -> tuple[dict, np.ndarray, np.ndarray, np.ndarray]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise DatabaseFormatError(f"{path}: bad magic {magic!r}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        if header.get("format_version") != FORMAT_VERSION:
            raise DatabaseFormatError(
                f"{path}: unsupported format version {header.get('format_version')}")
        count = int(header["count"])
        n_bins = int(header["n_bins"])
        n_ch = int(header["n_channels"])
        cells = np.empty((count, 2))
        transitions = np.empty(count, dtype=np.int64)
        channels = np.empty((count, n_ch, n_bins), dtype=np.float32)
        rec_bytes = n_ch * n_bins * 4
        for i in range(count):
            cells[i, 0], cells[i, 1], transitions[i] = struct.unpack("<ddI", fh.read(20))
            buf = fh.read(rec_bytes)
            if len(buf) != rec_bytes:
                raise DatabaseFormatError(f"{path}: truncated record {i}")
            channels[i] = np.frombuffer(buf, dtype="<f4").reshape(n_ch, n_bins)
    return header, cells, transitions, channels


def load_database(path: str | Path) -> DescriptorDatabase:
    header, cells, transitions, channels = _read_container(Path(path))
    rc = header.get("raycast")
    cfg = RaycastConfig(**rc) if rc else RaycastConfig(n_bins=int(header["n_bins"]))
    return DescriptorDatabase(cells=cells, channels=channels.astype(float),
                              transition_counts=transitions,
                              yaw_anchor=float(header.get("yaw_anchor", 0.0)),
                              grid_step=float(header.get("grid_step", 0.0)),
                              cfg=cfg,
                              active=tuple(bool(a) for a in header["active_channels"]))


def load_query_descriptor(path: str | Path) -> tuple[RadialDescriptor, dict]:
    header, cells, transitions, channels = _read_container(Path(path))
    if header["count"] != 1:
        raise DatabaseFormatError(f"{path}: query file must hold exactly one descriptor")
    d = RadialDescriptor(channels=channels[0].astype(float),
                         transition_count=int(transitions[0]),
                         active=tuple(bool(a) for a in header["active_channels"]))
    return d, header


def database_to_json(db: DescriptorDatabase, path: str | Path) -> None:
    """Debug export; the binary container is the interchange format."""
    header = _header_dict("database", db.n_bins, len(db), db.yaw_anchor,
                          db.grid_step, db.active, db.cfg, None)
    records = [{
        "x": float(db.cells[i, 0]),
        "y": float(db.cells[i, 1]),
        "transition_count": int(db.transition_counts[i]),
        "channels": np.asarray(db.channels[i], dtype=float).round(7).tolist(),
    } for i in range(len(db))]
    with open(path, "w") as fh:
        json.dump({"header": header, "records": records}, fh)
        fh.write("\n")
