"""Window detection in fisheye frames: band -> clusters -> pairs -> NMS.

Segment-first pipeline over a grayscale image: estimate the image band
where windows concentrate, cluster near-vertical segments inside it into
edge hypotheses, pair clusters into window proposals, verify each proposal
photometrically, and suppress overlaps. Every threshold is a named config
field; the whole pipeline is deterministic for a fixed input.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .segments import LineSegment, detect_segments


@dataclass(frozen=True)
class WindowDetectorConfig:
    # segment detection
    min_segment_length: float = 12.0
    gradient_threshold: float = 30.0
    blur_sigma: float = 1.0
    anchor_margin: float = 4.0
    fit_tolerance: float = 1.5
    # window band
    bright_percentile: float = 85.0
    band_smooth_rows: int = 31
    band_score_ratio: float = 0.5
    band_min_rows: int = 20
    band_fallback: tuple[float, float] = (0.2, 0.8)
    # vertical edge clustering
    min_vertical_angle: float = math.radians(30.0)
    cluster_min_length: float = 30.0
    cluster_gap: float = 8.0
    # pairing
    min_separation: float = 20.0
    max_separation: float = 400.0
    min_overlap_ratio: float = 0.4
    # verification
    contrast_margin: float = 20.0
    texture_floor: float = 8.0
    bright_sky: float = 200.0
    bright_col_fraction: float = 0.75
    interior_margin_frac: float = 0.1
    strip_width_frac: float = 0.25
    strip_min_width: int = 8
    # suppression / filtering
    iou_threshold: float = 0.4
    periphery_factor: float = 0.92
    red_dominance: float = 1.4


@dataclass(frozen=True)
class WindowBand:
    y_top: int
    y_bot: int

    def __post_init__(self):
        if not 0 <= self.y_top < self.y_bot:
            raise ValueError(f"invalid band [{self.y_top}, {self.y_bot}]")

    def contains(self, y: float) -> bool:
        return self.y_top <= y <= self.y_bot


@dataclass
class EdgeCluster:
    members: list[int]     # indices into the input segment list
    x: float               # representative column (mean of member midpoints)
    y_min: float
    y_max: float

    @property
    def extent(self) -> float:
        return self.y_max - self.y_min


@dataclass(frozen=True)
class WindowDetection:
    b_x: float
    b_y: float
    b_w: float
    b_h: float
    brightness_score: float
    contrast_score: float
    texture_score: float
    camera_id: str = ""

    @property
    def box(self) -> tuple[float, float, float, float]:
        return (self.b_x, self.b_y, self.b_w, self.b_h)

    @property
    def center(self) -> tuple[float, float]:
        return (self.b_x + self.b_w / 2.0, self.b_y + self.b_h / 2.0)


def box_iou(a: tuple[float, float, float, float],
            b: tuple[float, float, float, float]) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def estimate_window_band(image: np.ndarray, segments: list[LineSegment],
                         cfg: WindowDetectorConfig = WindowDetectorConfig()) -> WindowBand:
    """Locate the row band where windows concentrate.

    Combines (equally weighted) the per-row count of pixels above the
    bright percentile and the per-row density of near-vertical segment
    midpoints, both smoothed with the same moving average. The band is the
    longest contiguous run above half the peak score; if no run exceeds
    ``band_min_rows``, falls back to the middle 60% of rows.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("expected a non-empty 2D grayscale image")
    h = img.shape[0]

    thr = np.percentile(img, cfg.bright_percentile)
    bright = (img > thr).sum(axis=1).astype(np.float64)
    # only segments long enough to ever form edge clusters inform the band
    segdens = np.zeros(h)
    for s in segments:
        if s.angle_from_horizontal > cfg.min_vertical_angle \
                and s.length >= cfg.cluster_min_length:
            row = int(round(s.mid_y))
            if 0 <= row < h:
                segdens[row] += 1.0
    bright = ndimage.uniform_filter1d(bright, cfg.band_smooth_rows, mode="nearest")
    segdens = ndimage.uniform_filter1d(segdens, cfg.band_smooth_rows, mode="nearest")
    if bright.max() > 0:
        bright /= bright.max()
    if segdens.max() > 0:
        segdens /= segdens.max()
    combined = 0.5 * bright + 0.5 * segdens

    best_start, best_len = 0, 0
    if combined.max() > 0:
        # inclusive: rows carried by one evidence source alone sit exactly
        # at half the peak when the other is flat
        above = combined >= cfg.band_score_ratio * combined.max()
        start = None
        for i in range(h + 1):
            if i < h and above[i]:
                if start is None:
                    start = i
            elif start is not None:
                if i - start > best_len:
                    best_start, best_len = start, i - start
                start = None
    if best_len <= cfg.band_min_rows:
        lo, hi = cfg.band_fallback
        return WindowBand(y_top=int(lo * h), y_bot=max(int(hi * h) - 1, int(lo * h) + 1))
    return WindowBand(y_top=best_start, y_bot=best_start + best_len - 1)


def cluster_vertical_edges(segments: list[LineSegment], band: WindowBand,
                           min_angle: float = math.radians(30.0),
                           min_length: float = 30.0,
                           gap: float = 8.0) -> list[EdgeCluster]:
    """Group near-vertical in-band segments into single edge hypotheses.

    Segments are visited in ascending midpoint-x order; each joins the
    nearest cluster within ``gap`` columns that overlaps it vertically by
    at least one pixel, else starts a new cluster.
    """
    eligible = [i for i, s in enumerate(segments)
                if band.contains(s.mid_y)
                and s.angle_from_horizontal > min_angle
                and s.length >= min_length]
    eligible.sort(key=lambda i: (segments[i].mid_x, segments[i].mid_y, i))

    clusters: list[EdgeCluster] = []
    for i in eligible:
        s = segments[i]
        best = None
        best_dx = gap
        for k, cl in enumerate(clusters):
            dx = abs(cl.x - s.mid_x)
            if dx <= best_dx and min(cl.y_max, s.y_max) - max(cl.y_min, s.y_min) >= 1.0:
                if best is None or dx < best_dx:
                    best, best_dx = k, dx
        if best is None:
            clusters.append(EdgeCluster(members=[i], x=s.mid_x, y_min=s.y_min, y_max=s.y_max))
        else:
            cl = clusters[best]
            cl.members.append(i)
            cl.x = sum(segments[m].mid_x for m in cl.members) / len(cl.members)
            cl.y_min = min(cl.y_min, s.y_min)
            cl.y_max = max(cl.y_max, s.y_max)
    clusters.sort(key=lambda c: c.x)
    return clusters


def _region_mean_std(img: np.ndarray, x0: int, x1: int, y0: int, y1: int):
    """Mean/std of img[y0:y1, x0:x1] clipped to bounds; None when empty."""
    h, w = img.shape
    x0, x1 = max(0, x0), min(w, x1)
    y0, y1 = max(0, y0), min(h, y1)
    if x1 <= x0 or y1 <= y0:
        return None
    region = img[y0:y1, x0:x1]
    return float(region.mean()), float(region.std()), region


def pair_and_verify(clusters: list[EdgeCluster], image: np.ndarray,
                    cfg: WindowDetectorConfig = WindowDetectorConfig(),
                    camera_id: str = "") -> list[WindowDetection]:
    """Pair edge clusters into window boxes and verify them photometrically.

    A pair qualifies on horizontal separation and vertical overlap ratio.
    Verification: the interior must be brighter than flanking wall strips
    by the contrast margin, textured (std above the floor) or sky-bright,
    and uniformly bright across its columns (rejects proposals spanning
    wall gaps between two real windows).
    """
    img = np.asarray(image, dtype=np.float64)
    detections = []
    for a in range(len(clusters)):
        for b in range(a + 1, len(clusters)):
            ca, cb = clusters[a], clusters[b]
            if ca.x > cb.x:
                ca, cb = cb, ca
            sep = cb.x - ca.x
            if not cfg.min_separation <= sep <= cfg.max_separation:
                continue
            oy0 = max(ca.y_min, cb.y_min)
            oy1 = min(ca.y_max, cb.y_max)
            overlap = oy1 - oy0
            min_extent = min(ca.extent, cb.extent)
            if overlap <= 0 or min_extent <= 0:
                continue
            if overlap / min_extent < cfg.min_overlap_ratio:
                continue

            bx, by = ca.x, oy0
            bw, bh = sep, overlap
            mx = max(2, int(round(cfg.interior_margin_frac * bw)))
            my = max(2, int(round(cfg.interior_margin_frac * bh)))
            interior = _region_mean_std(img, int(bx) + mx, int(bx + bw) - mx,
                                        int(by) + my, int(by + bh) - my)
            if interior is None:
                continue
            int_mean, int_std, int_region = interior

            sw = max(cfg.strip_min_width, int(round(cfg.strip_width_frac * bw)))
            strips = []
            for sx0, sx1 in ((int(bx) - sw, int(bx)), (int(bx + bw), int(bx + bw) + sw)):
                strip = _region_mean_std(img, sx0, sx1, int(by), int(by + bh))
                if strip is not None:
                    strips.append(strip[2])
            if not strips:
                continue
            wall_mean = float(np.concatenate([s.ravel() for s in strips]).mean())

            if int_mean < wall_mean + cfg.contrast_margin:
                continue
            if int_std < cfg.texture_floor and int_mean < cfg.bright_sky:
                continue
            col_means = int_region.mean(axis=0)
            bright_cols = float(np.mean(col_means >= wall_mean + cfg.contrast_margin))
            if bright_cols < cfg.bright_col_fraction:
                continue

            detections.append(WindowDetection(
                b_x=float(bx), b_y=float(by), b_w=float(bw), b_h=float(bh),
                brightness_score=int_mean, contrast_score=int_mean - wall_mean,
                texture_score=int_std, camera_id=camera_id))
    return detections


def suppress_and_filter(detections: list[WindowDetection], image: np.ndarray,
                        cfg: WindowDetectorConfig = WindowDetectorConfig(),
                        principal_point: tuple[float, float] | None = None,
                        fov_radius: float | None = None,
                        color_image: np.ndarray | None = None) -> list[WindowDetection]:
    """Greedy NMS by brightness, then periphery and red-dominance rejection.

    Without a camera config the FoV circle defaults to the largest circle
    inscribed in the image. The red filter only runs when a color image is
    supplied.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape
    if principal_point is None:
        principal_point = (w / 2.0, h / 2.0)
    if fov_radius is None:
        fov_radius = min(w, h) / 2.0

    ranked = sorted(detections,
                    key=lambda d: (-d.brightness_score, d.b_x, d.b_y, d.b_w, d.b_h))
    kept: list[WindowDetection] = []
    for det in ranked:
        if any(box_iou(det.box, k.box) > cfg.iou_threshold for k in kept):
            continue
        cx, cy = det.center
        if math.hypot(cx - principal_point[0], cy - principal_point[1]) \
                > cfg.periphery_factor * fov_radius:
            continue
        if color_image is not None:
            x0, y0 = int(det.b_x), int(det.b_y)
            x1, y1 = int(det.b_x + det.b_w), int(det.b_y + det.b_h)
            region = np.asarray(color_image, dtype=np.float64)[
                max(0, y0):min(h, y1), max(0, x0):min(w, x1)]
            if region.size:
                mr, mg, mb = region[..., 0].mean(), region[..., 1].mean(), region[..., 2].mean()
                if mr > cfg.red_dominance * mg and mr > cfg.red_dominance * mb:
                    continue
        kept.append(det)
    return kept


@dataclass
class DetectionPipelineResult:
    detections: list[WindowDetection]
    segments: list[LineSegment]
    clusters: list[EdgeCluster]
    band: WindowBand

    def window_segment_indices(self) -> set[int]:
        """Segments belonging to clusters that flank a surviving detection."""
        edges = set()
        for det in self.detections:
            for cl in self.clusters:
                if abs(cl.x - det.b_x) < 1.0 or abs(cl.x - (det.b_x + det.b_w)) < 1.0:
                    edges.update(cl.members)
        return edges


def detect_windows(image: np.ndarray,
                   cfg: WindowDetectorConfig = WindowDetectorConfig(),
                   camera_id: str = "",
                   color_image: np.ndarray | None = None,
                   principal_point: tuple[float, float] | None = None,
                   fov_radius: float | None = None) -> DetectionPipelineResult:
    """Full pipeline: segments -> band -> clusters -> pairs -> NMS."""
    segs = detect_segments(image, min_length=cfg.min_segment_length,
                           gradient_threshold=cfg.gradient_threshold,
                           blur_sigma=cfg.blur_sigma, anchor_margin=cfg.anchor_margin,
                           fit_tolerance=cfg.fit_tolerance)
    band = estimate_window_band(image, segs, cfg)
    clusters = cluster_vertical_edges(segs, band, cfg.min_vertical_angle,
                                      cfg.cluster_min_length, cfg.cluster_gap)
    dets = pair_and_verify(clusters, image, cfg, camera_id)
    dets = suppress_and_filter(dets, image, cfg, principal_point, fov_radius, color_image)
    return DetectionPipelineResult(detections=dets, segments=segs,
                                   clusters=clusters, band=band)


def save_detections_csv(detections: list[WindowDetection], path: str | Path,
                        header_lines: list[str] | None = None) -> None:
    """CSV interchange: camera_id, b_x, b_y, b_w, b_h, score (= brightness)."""
    with open(path, "w", newline="") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["camera_id", "b_x", "b_y", "b_w", "b_h", "score"])
        for d in detections:
            writer.writerow([d.camera_id, f"{d.b_x:.2f}", f"{d.b_y:.2f}",
                             f"{d.b_w:.2f}", f"{d.b_h:.2f}", f"{d.brightness_score:.3f}"])


def load_detections_csv(path: str | Path) -> list[WindowDetection]:
    detections = []
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    for row in csv.DictReader(rows):
        detections.append(WindowDetection(
            b_x=float(row["b_x"]), b_y=float(row["b_y"]),
            b_w=float(row["b_w"]), b_h=float(row["b_h"]),
            brightness_score=float(row["score"]), contrast_score=0.0,
            texture_score=0.0, camera_id=row["camera_id"]))
    return detections


def config_with(cfg: WindowDetectorConfig, **kwargs) -> WindowDetectorConfig:
    """Convenience for CLI flag overrides."""
    return replace(cfg, **kwargs)
