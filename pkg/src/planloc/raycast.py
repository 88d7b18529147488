"""Radial descriptors cast from floor-plan rasters.

From a pose, ``n_bins`` rays are marched over the raster at a fixed step
until they hit a window pixel, a wall pixel, or reach ``r_max``. The hits
are encoded into a five-channel matrix:

* channel 0: range / r_max
* channel 1: hit type (1.0 wall, 0.5 window, 0.0 open)
* channel 2: clipped circular range gradient |dr/dbin| / r_clip
* channel 3: inverse range 1 / (1 + r)
* channel 4: clipped local range standard deviation over 2w+1 bins

Headings are quantized to the angular bin grid: ray j of a descriptor at
heading psi points along bin index (round(psi / bin) + j) mod n_bins of a
fixed direction table. Rotating the heading by a whole number of bins
therefore reuses the exact same ray directions and permutes the columns
bit-for-bit, which keeps descriptor matching strictly shift-equivariant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .floorplan import FloorPlanRaster, Pose2D

N_CHANNELS = 5

# Sample-probe counter for cost instrumentation (tests reset/read it).
_PROBE_COUNT = 0


def reset_probe_count() -> None:
    global _PROBE_COUNT
    _PROBE_COUNT = 0


def probe_count() -> int:
    return _PROBE_COUNT


class HitType(enum.IntEnum):
    OPEN = 0
    WALL = 1
    WINDOW = 2


# channel-1 encoding indexed by HitType
_HIT_VALUES = np.array([0.0, 1.0, 0.5])


@dataclass(frozen=True)
class RaycastConfig:
    """Ray casting and channel-encoding parameters."""

    n_bins: int = 360
    r_max: float = 30.0
    step: float = 0.02
    r_clip: float = 5.0
    sigma_clip: float = 10.0
    var_halfwidth: int = 5

    def __post_init__(self):
        if self.n_bins < 8:
            raise ValueError(f"n_bins must be >= 8, got {self.n_bins}")
        if not 0.0 < self.step <= self.r_max:
            raise ValueError(f"need 0 < step <= r_max, got step={self.step} r_max={self.r_max}")
        if not self.r_clip > 0:
            raise ValueError("r_clip must be positive")
        if not self.sigma_clip > 0:
            raise ValueError("sigma_clip must be positive")
        if self.var_halfwidth < 1:
            raise ValueError("var_halfwidth must be >= 1")

    @property
    def bin_width(self) -> float:
        return 2.0 * math.pi / self.n_bins

    def n_steps(self) -> int:
        """Number of samples strictly inside (0, r_max)."""
        n = int(math.floor(self.r_max / self.step))
        while n > 0 and n * self.step >= self.r_max:
            n -= 1
        return n


@dataclass(frozen=True)
class RayHit:
    range: float
    hit_type: HitType


@dataclass
class RadialDescriptor:
    """C x n_bins channel matrix plus its transition signature.

    ``active`` marks which channels carry data; visual descriptors built
    from window detections populate only the hit-type channel.
    """

    channels: np.ndarray  # (N_CHANNELS, n_bins) float
    transition_count: int
    active: tuple[bool, ...] = field(default=(True,) * N_CHANNELS)

    def __post_init__(self):
        if self.channels.ndim != 2 or self.channels.shape[0] != N_CHANNELS:
            raise ValueError(f"channels must be ({N_CHANNELS}, n_bins), got {self.channels.shape}")
        if len(self.active) != N_CHANNELS:
            raise ValueError("active mask must cover all channels")

    @property
    def n_bins(self) -> int:
        return self.channels.shape[1]

    def hit_labels(self) -> np.ndarray:
        """Decode channel 1 back to HitType integer labels."""
        ch1 = self.channels[1]
        labels = np.zeros(self.n_bins, dtype=np.int8)
        labels[ch1 == 1.0] = int(HitType.WALL)
        labels[ch1 == 0.5] = int(HitType.WINDOW)
        return labels


def _direction_table(n_bins: int) -> tuple[np.ndarray, np.ndarray]:
    angles = np.arange(n_bins) * (2.0 * math.pi / n_bins)
    return np.cos(angles), np.sin(angles)


def _march(raster: FloorPlanRaster, origin_xy: tuple[float, float],
           dir_x: np.ndarray, dir_y: np.ndarray, cfg: RaycastConfig,
           chunk: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """March a bundle of rays; returns (ranges, hit types).

    Rays sample at radii k*step strictly inside (0, r_max); out-of-raster
    samples classify as open. Rays with no hit report (r_max, OPEN).
    Marching is chunked along the radius so rays stop probing once hit.

    Fixed-step sampling can step over structures thinner than step/resolution
    pixels (the default 0.02 m step on a 0.01 m/px plan probes every other
    pixel); keep step <= resolution when thin strokes must never be missed.
    """
    global _PROBE_COUNT
    n_rays = dir_x.shape[0]
    ranges = np.full(n_rays, cfg.r_max)
    hits = np.zeros(n_rays, dtype=np.int8)

    class_map = raster.class_map()
    h, w = raster.shape
    ox, oy = raster.origin
    px, py = origin_xy
    inv_res = 1.0 / raster.resolution

    n_steps = cfg.n_steps()
    alive = np.arange(n_rays)
    start = 1
    while start <= n_steps and alive.size:
        stop = min(start + chunk, n_steps + 1)
        radii = np.arange(start, stop) * cfg.step  # (S,)
        sx = px + dir_x[alive, None] * radii[None, :]
        sy = py + dir_y[alive, None] * radii[None, :]
        col = np.floor((sx - ox) * inv_res).astype(np.int64)
        row = np.floor((oy - sy) * inv_res).astype(np.int64)
        inside = (col >= 0) & (col < w) & (row >= 0) & (row < h)
        cls = np.zeros(col.shape, dtype=np.int8)
        np.copyto(cls, class_map[np.clip(row, 0, h - 1), np.clip(col, 0, w - 1)],
                  where=inside)
        _PROBE_COUNT += cls.size
        hit_any = cls != 0
        first = np.argmax(hit_any, axis=1)
        got = hit_any[np.arange(alive.size), first]
        if got.any():
            rows_hit = np.nonzero(got)[0]
            rays_hit = alive[rows_hit]
            ranges[rays_hit] = radii[first[rows_hit]]
            hits[rays_hit] = cls[rows_hit, first[rows_hit]]
            alive = alive[~got]
        start = stop
    return ranges, hits


def cast_ray(raster: FloorPlanRaster, origin: tuple[float, float],
             bearing: float, cfg: RaycastConfig) -> RayHit:
    """First hit along a single ray; window mask takes precedence over wall.

    An origin inside a structure pixel is not an error: the first sample
    registers a hit at range = step.
    """
    d = np.asarray([bearing], dtype=float)
    ranges, hits = _march(raster, origin, np.cos(d), np.sin(d), cfg)
    return RayHit(range=float(ranges[0]), hit_type=HitType(int(hits[0])))


def _pose_ray_fan(pose: Pose2D, cfg: RaycastConfig) -> tuple[np.ndarray, np.ndarray]:
    """Direction vectors for all bins at the pose's quantized heading."""
    cos_t, sin_t = _direction_table(cfg.n_bins)
    q = int(round(pose.psi / cfg.bin_width))
    idx = (q + np.arange(cfg.n_bins)) % cfg.n_bins
    return cos_t[idx], sin_t[idx]


def cast_pose(raster: FloorPlanRaster, pose: Pose2D,
              cfg: RaycastConfig) -> tuple[np.ndarray, np.ndarray]:
    """Ranges and hit labels for the full ray fan at a pose."""
    dx, dy = _pose_ray_fan(pose, cfg)
    return _march(raster, (pose.x, pose.y), dx, dy, cfg)


def channels_from_ranges(ranges: np.ndarray, hits: np.ndarray,
                         cfg: RaycastConfig) -> np.ndarray:
    """Encode per-bin (range, hit type) into the five channels.

    The gradient is a circular central difference in meters per bin; the
    variance channel uses the population standard deviation over the
    2w+1-bin circular neighborhood. All accumulation runs in a fixed bin
    order so a cyclic shift of the inputs shifts the outputs bit-exactly.
    """
    n = ranges.shape[0]
    out = np.empty((N_CHANNELS, n))
    out[0] = ranges / cfg.r_max
    out[1] = _HIT_VALUES[hits]
    grad = (np.roll(ranges, -1) - np.roll(ranges, 1)) * 0.5
    out[2] = np.minimum(np.abs(grad) / cfg.r_clip, 1.0)
    out[3] = 1.0 / (1.0 + ranges)
    w = cfg.var_halfwidth
    win = 2 * w + 1
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    sq = ranges * ranges
    for off in range(-w, w + 1):
        s1 += np.roll(ranges, -off)
        s2 += np.roll(sq, -off)
    mean = s1 / win
    var = np.maximum(s2 / win - mean * mean, 0.0)
    out[4] = np.minimum(np.sqrt(var) / cfg.sigma_clip, 1.0)
    return out


def transitions_of_labels(labels: np.ndarray) -> int:
    """Circular count of adjacent label changes."""
    return int(np.count_nonzero(labels != np.roll(labels, -1)))


def compute_descriptor(raster: FloorPlanRaster, pose: Pose2D,
                       cfg: RaycastConfig) -> RadialDescriptor:
    """Cast the full ray fan at a pose and encode it."""
    ranges, hits = cast_pose(raster, pose, cfg)
    return RadialDescriptor(channels=channels_from_ranges(ranges, hits, cfg),
                            transition_count=transitions_of_labels(hits))


def transition_signature(d: RadialDescriptor) -> int:
    """Rotation-invariant count of hit-type boundaries around the circle."""
    return transitions_of_labels(d.hit_labels())
