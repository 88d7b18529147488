"""Synthetic plans, simulated observations, and end-to-end scoring.

This is the oracle layer: deterministic floor-plan generation, a simulator
that produces camera-style hit-type descriptors with controllable failure
modes (dropout, spurious windows, bearing jitter, span dilation), and the
localization evaluation loop plus the report/metric formatting used by the
CLI (correlation peak, bin agreement, descriptor statistics).

Simulated observations map open rays to the wall value, mirroring the
visual pipeline's default: a camera never reports "open", so doorways read
as wall. Without this the two modalities would disagree at every opening.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import fft as sfft

from .database import DescriptorDatabase
from .floorplan import FloorPlanRaster, Pose2D
from .matching import MatchConfig, match_query
from .raycast import (N_CHANNELS, HitType, RadialDescriptor, RaycastConfig,
                      cast_pose, compute_descriptor, transitions_of_labels)

SeedLike = int | np.random.SeedSequence


class InfeasiblePlanError(ValueError):
    """Window rules cannot be satisfied on the requested footprint."""


class PoseInStructureError(ValueError):
    """Observation requested from inside a wall/window pixel."""


@dataclass(frozen=True)
class SynthPlanSpec:
    width: float = 20.0             # outer footprint, meters
    height: float = 15.0
    resolution: float = 0.02        # meters per pixel
    wall_thickness: float = 0.15
    window_fraction: float = 0.35   # of each exterior facade length
    window_min: float = 0.8
    window_max: float = 2.5
    window_margin: float = 0.8      # keep-out from facade ends
    gap_min: float = 0.5            # between windows on a facade
    gap_max: float = 2.5
    min_room: float = 4.0
    max_depth: int = 2              # recursive partition depth
    door_width: float = 1.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.resolution <= 0:
            raise ValueError("dimensions and resolution must be positive")
        if not 0.0 <= self.window_fraction <= 1.0:
            raise ValueError("window_fraction must be in [0, 1]")
        if self.window_min > self.window_max:
            raise ValueError("window_min must not exceed window_max")
        if self.wall_thickness <= 0:
            raise ValueError("wall_thickness must be positive")


@dataclass(frozen=True)
class ObservationNoise:
    dropout_prob: float = 0.0        # whole-window dropout
    spurious_rate: float = 0.0       # expected spurious windows per frame
    jitter_deg: float = 0.0          # per-span bearing jitter stddev
    dilation_bins: int = 0           # negative values erode
    spurious_width_bins: tuple[int, int] = (2, 20)

    def __post_init__(self):
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ValueError("dropout_prob must be in [0, 1]")
        if self.spurious_rate < 0 or self.jitter_deg < 0:
            raise ValueError("rates must be non-negative")


NOISELESS = ObservationNoise()


class _Painter:
    """Rect painting in world coordinates onto row-major masks."""

    def __init__(self, spec: SynthPlanSpec):
        self.res = spec.resolution
        self.w_px = max(1, int(round(spec.width / spec.resolution)))
        self.h_px = max(1, int(round(spec.height / spec.resolution)))
        self.height = spec.height
        self.wall = np.zeros((self.h_px, self.w_px), dtype=bool)
        self.window = np.zeros((self.h_px, self.w_px), dtype=bool)

    def _rect(self, x0, x1, y0, y1):
        c0 = max(0, int(math.floor(x0 / self.res + 1e-9)))
        c1 = min(self.w_px, int(math.ceil(x1 / self.res - 1e-9)))
        r0 = max(0, int(math.floor((self.height - y1) / self.res + 1e-9)))
        r1 = min(self.h_px, int(math.ceil((self.height - y0) / self.res - 1e-9)))
        return r0, r1, c0, c1

    def fill(self, mask: np.ndarray, x0, x1, y0, y1, value=True):
        r0, r1, c0, c1 = self._rect(x0, x1, y0, y1)
        if r0 < r1 and c0 < c1:
            mask[r0:r1, c0:c1] = value


def _paint_facade_windows(p: _Painter, spec: SynthPlanSpec, rng: np.random.Generator,
                          side_len: float, place) -> None:
    """Walk one facade painting windows until the target fraction is covered."""
    if spec.window_fraction <= 0:
        return
    usable = side_len - 2.0 * spec.window_margin
    if spec.window_min > usable:
        raise InfeasiblePlanError(
            f"window_min {spec.window_min} m exceeds usable facade {usable:.2f} m")
    target = spec.window_fraction * side_len
    cursor = spec.window_margin
    painted = 0.0
    while painted < target and cursor + spec.window_min <= side_len - spec.window_margin:
        w = float(rng.uniform(spec.window_min, spec.window_max))
        w = min(w, side_len - spec.window_margin - cursor)
        place(cursor, cursor + w)
        painted += w
        cursor += w + float(rng.uniform(spec.gap_min, spec.gap_max))


def _partition(p: _Painter, spec: SynthPlanSpec, rng: np.random.Generator,
               x0: float, y0: float, x1: float, y1: float, depth: int) -> None:
    if depth >= spec.max_depth:
        return
    w, h = x1 - x0, y1 - y0
    t = spec.wall_thickness
    if max(w, h) < 2.0 * spec.min_room:
        return
    if w >= h:
        pos = x0 + float(rng.uniform(spec.min_room, w - spec.min_room))
        p.fill(p.wall, pos - t / 2, pos + t / 2, y0, y1)
        door = y0 + float(rng.uniform(0.2, 0.8)) * (h - spec.door_width)
        p.fill(p.wall, pos - t / 2, pos + t / 2, door, door + spec.door_width, False)
        _partition(p, spec, rng, x0, y0, pos - t / 2, y1, depth + 1)
        _partition(p, spec, rng, pos + t / 2, y0, x1, y1, depth + 1)
    else:
        pos = y0 + float(rng.uniform(spec.min_room, h - spec.min_room))
        p.fill(p.wall, x0, x1, pos - t / 2, pos + t / 2)
        door = x0 + float(rng.uniform(0.2, 0.8)) * (w - spec.door_width)
        p.fill(p.wall, door, door + spec.door_width, pos - t / 2, pos + t / 2, False)
        _partition(p, spec, rng, x0, y0, x1, pos - t / 2, depth + 1)
        _partition(p, spec, rng, x0, pos + t / 2, x1, y1, depth + 1)


def generate_plan(spec: SynthPlanSpec, seed: SeedLike = 0) -> FloorPlanRaster:
    """Deterministic synthetic plan: perimeter walls, facade windows,
    recursively partitioned rooms with doorway gaps."""
    rng = np.random.default_rng(seed)
    p = _Painter(spec)
    t = spec.wall_thickness
    W, H = spec.width, spec.height
    p.fill(p.wall, 0, W, H - t, H)
    p.fill(p.wall, 0, W, 0, t)
    p.fill(p.wall, 0, t, 0, H)
    p.fill(p.wall, W - t, W, 0, H)

    # facades in fixed order: north, south, west, east
    _paint_facade_windows(p, spec, rng, W,
                          lambda a, b: p.fill(p.window, a, b, H - t, H))
    _paint_facade_windows(p, spec, rng, W,
                          lambda a, b: p.fill(p.window, a, b, 0, t))
    _paint_facade_windows(p, spec, rng, H,
                          lambda a, b: p.fill(p.window, 0, t, a, b))
    _paint_facade_windows(p, spec, rng, H,
                          lambda a, b: p.fill(p.window, W - t, W, a, b))

    _partition(p, spec, rng, t, t, W - t, H - t, 0)
    return FloorPlanRaster(wall_mask=p.wall, window_mask=p.window,
                           resolution=spec.resolution, origin=(0.0, spec.height))


def _window_arcs(hits: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous circular runs of window bins as (start, length)."""
    n = hits.shape[0]
    is_win = hits == int(HitType.WINDOW)
    if is_win.all():
        return [(0, n)]
    if not is_win.any():
        return []
    arcs = []
    # scan from a non-window bin so circular runs are not split
    origin = int(np.argmin(is_win))
    start = None
    for k in range(n + 1):
        j = (origin + k) % n
        if k < n and is_win[j]:
            if start is None:
                start = j
        elif start is not None:
            length = (j - start) % n or n
            arcs.append((start, length))
            start = None
    arcs.sort()
    return arcs


def _rasterize_arcs(arcs: list[tuple[int, int]], n: int) -> np.ndarray:
    row = np.ones(n)
    for start, length in arcs:
        idx = (start + np.arange(length)) % n
        row[idx] = 0.5
    return row


def simulate_observation(raster: FloorPlanRaster, pose: Pose2D, cfg: RaycastConfig,
                         noise: ObservationNoise = NOISELESS,
                         seed: SeedLike = 0) -> RadialDescriptor:
    """Camera-style hit-type descriptor at a pose, with injected failures.

    Ground truth comes from ray casting; open bins map to wall (1.0). All
    random draws happen upfront in a fixed order, so raising one noise
    probability leaves the remaining draws aligned (useful for monotone
    noise sweeps under a common seed).
    """
    col_f, row_f = raster.world_to_pixel(pose.x, pose.y)
    if raster.classify_pixel(int(math.floor(col_f)), int(math.floor(row_f))) != 0:
        raise PoseInStructureError(f"pose ({pose.x:.2f}, {pose.y:.2f}) is inside structure")
    n = cfg.n_bins
    _, hits = cast_pose(raster, pose, cfg)
    arcs = _window_arcs(hits)

    rng = np.random.default_rng(seed)
    u_drop = rng.random(len(arcs))
    jitter = rng.normal(0.0, noise.jitter_deg, len(arcs))
    n_spur = int(rng.poisson(noise.spurious_rate))
    lo, hi = noise.spurious_width_bins
    spur_starts = rng.integers(0, n, n_spur)
    spur_widths = rng.integers(lo, hi + 1, n_spur)

    deg_per_bin = 360.0 / n
    out_arcs = []
    for i, (start, length) in enumerate(arcs):
        if u_drop[i] < noise.dropout_prob:
            continue
        shift = int(round(jitter[i] / deg_per_bin))
        out_arcs.append(((start + shift) % n, length))
    for k in range(n_spur):
        out_arcs.append((int(spur_starts[k]), min(int(spur_widths[k]), n)))
    if noise.dilation_bins:
        d = noise.dilation_bins
        out_arcs = [((s - d) % n, ln + 2 * d) for s, ln in out_arcs if ln + 2 * d > 0]
        out_arcs = [(s, min(ln, n)) for s, ln in out_arcs]

    row = _rasterize_arcs(out_arcs, n)
    channels = np.zeros((N_CHANNELS, n))
    channels[1] = row
    labels = np.where(row == 0.5, 2, 1).astype(np.int8)
    return RadialDescriptor(channels=channels,
                            transition_count=transitions_of_labels(labels),
                            active=(False, True, False, False, False))


def camera_view_rows(db: DescriptorDatabase) -> np.ndarray:
    """Database hit-type rows as a camera would see them (open -> wall)."""
    ch1 = db.channels[:, 1, :]
    return np.where(ch1 == 0.5, 0.5, 1.0)


def unique_candidate_indices(db: DescriptorDatabase, tol: float = 1e-9) -> list[int]:
    """Candidates whose camera-view row matches no other cell at any shift.

    Cells whose map row contains open bins are excluded as well: their
    noiseless observation cannot reach score 1.0, so exact-recovery
    guarantees do not apply to them.
    """
    rows = camera_view_rows(db)
    has_open = (db.channels[:, 1, :] == 0.0).any(axis=1)
    n = rows.shape[1]
    f = sfft.rfft(rows, axis=1)
    norms = np.linalg.norm(rows, axis=1)
    unique = []
    for k in range(rows.shape[0]):
        if has_open[k]:
            continue
        corr = sfft.irfft(np.conj(f[k])[None, :] * f, n=n, axis=1)
        best = corr.max(axis=1) / (norms[k] * norms)
        best[k] = -np.inf
        if best.max() < 1.0 - tol:
            unique.append(k)
    return unique


def _wrap_deg(delta: float) -> float:
    return abs((delta + 180.0) % 360.0 - 180.0)


@dataclass(frozen=True)
class EvalRow:
    trial: int
    true_x: float
    true_y: float
    true_yaw_deg: float
    est_x: float
    est_y: float
    est_yaw_deg: float
    score: float
    rank_true: int
    yaw_err_top1_deg: float
    pos_err_top1_m: float
    yaw_err_true_deg: float


@dataclass
class EvalReport:
    rows: list[EvalRow]
    n_candidates: int
    n_unique: int
    aggregates: dict[str, float]

    def summary_text(self) -> str:
        a = self.aggregates
        lines = [
            f"trials: {len(self.rows)} over {self.n_unique} unique of "
            f"{self.n_candidates} candidates",
            f"rank-1 rate: {a['rank1_rate']:.3f}",
            f"rank-1 with yaw error < 0.5 deg: {a['rank1_yaw05_rate']:.3f}",
            f"yaw error < 2 deg at true cell: {a['yaw2_at_true_rate']:.3f}",
            f"median yaw error (top-1): {a['median_yaw_err_top1_deg']:.3f} deg",
            f"median yaw error (true cell): {a['median_yaw_err_true_deg']:.3f} deg",
            f"median position error: {a['median_pos_err_m']:.3f} m",
        ]
        return "\n".join(lines)

    def to_csv(self, path, header_lines: list[str] | None = None) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines or []:
                fh.write(f"# {line}\n")
            for key in sorted(self.aggregates):
                fh.write(f"# {key} = {self.aggregates[key]:.6f}\n")
            writer = csv.writer(fh)
            writer.writerow(["trial", "true_x", "true_y", "true_yaw_deg",
                             "est_x", "est_y", "est_yaw_deg", "score", "rank_true",
                             "yaw_err_top1_deg", "pos_err_top1_m", "yaw_err_true_deg"])
            for r in self.rows:
                writer.writerow([r.trial, f"{r.true_x:.4f}", f"{r.true_y:.4f}",
                                 f"{r.true_yaw_deg:.4f}", f"{r.est_x:.4f}",
                                 f"{r.est_y:.4f}", f"{r.est_yaw_deg:.4f}",
                                 f"{r.score:.6f}", r.rank_true,
                                 f"{r.yaw_err_top1_deg:.4f}", f"{r.pos_err_top1_m:.4f}",
                                 f"{r.yaw_err_true_deg:.4f}"])


def run_localization_eval(raster: FloorPlanRaster, db: DescriptorDatabase,
                          trials: int, noise: ObservationNoise,
                          match_cfg: MatchConfig, seed: int = 0,
                          cfg: RaycastConfig | None = None,
                          query_mode: str = "camera") -> EvalReport:
    """Simulate observations at database poses and score retrieval.

    Poses are grid-snapped (database cells) with uniform continuous yaw.
    ``query_mode="camera"`` simulates hit-type-only observations with the
    noise model and draws poses from the unique-row subset (ambiguous
    poses are reported separately via n_unique). ``query_mode="map"``
    queries with full noiseless floor-plan descriptors over all cells,
    for comparing channel subsets on plans where hit types alone are
    non-discriminative. Deterministic for a fixed seed.
    """
    cfg = cfg if cfg is not None else db.cfg
    if query_mode not in ("camera", "map"):
        raise ValueError(f"unknown query_mode {query_mode!r}")
    if query_mode == "camera":
        pool = unique_candidate_indices(db)
        if not pool:
            raise ValueError("no unique candidate poses; plan is too ambiguous "
                             "to evaluate")
    else:
        pool = list(range(len(db)))
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(trials + 1)
    rng = np.random.default_rng(children[0])
    full_cfg = replace(match_cfg, top_k=len(db))

    rows = []
    for t in range(trials):
        k = pool[int(rng.integers(len(pool)))]
        yaw = float(rng.uniform(0.0, 2.0 * math.pi))
        pose = Pose2D(float(db.cells[k, 0]), float(db.cells[k, 1]), yaw)
        if query_mode == "camera":
            obs = simulate_observation(raster, pose, cfg, noise, seed=children[t + 1])
        else:
            obs = compute_descriptor(raster, pose, cfg)
        results = match_query(obs, db, full_cfg)
        top = results[0]
        rank = next(i + 1 for i, r in enumerate(results) if r.candidate_index == k)
        at_true = next(r for r in results if r.candidate_index == k)
        yaw_deg = math.degrees(yaw)
        rows.append(EvalRow(
            trial=t, true_x=pose.x, true_y=pose.y, true_yaw_deg=yaw_deg,
            est_x=top.x, est_y=top.y, est_yaw_deg=math.degrees(top.yaw),
            score=top.score, rank_true=rank,
            yaw_err_top1_deg=_wrap_deg(math.degrees(top.yaw) - yaw_deg),
            pos_err_top1_m=math.hypot(top.x - pose.x, top.y - pose.y),
            yaw_err_true_deg=_wrap_deg(math.degrees(at_true.yaw) - yaw_deg)))

    n = len(rows)
    yaw1 = sorted(r.yaw_err_top1_deg for r in rows)
    yawt = sorted(r.yaw_err_true_deg for r in rows)
    pos = sorted(r.pos_err_top1_m for r in rows)
    aggregates = {
        "rank1_rate": sum(r.rank_true == 1 for r in rows) / n,
        "rank1_yaw05_rate": sum(r.rank_true == 1 and r.yaw_err_top1_deg < 0.5
                                for r in rows) / n,
        "yaw2_at_true_rate": sum(r.yaw_err_true_deg < 2.0 for r in rows) / n,
        "median_yaw_err_top1_deg": yaw1[n // 2],
        "median_yaw_err_true_deg": yawt[n // 2],
        "median_pos_err_m": pos[n // 2],
    }
    return EvalReport(rows=rows, n_candidates=len(db), n_unique=len(pool),
                      aggregates=aggregates)


# ---------------------------------------------------------------------------
# agreement / statistics reports


@dataclass
class AgreementReport:
    shift: int
    agree_bins: int
    n_bins: int
    fraction: float
    camera_labels: np.ndarray  # after shifting the camera row
    map_labels: np.ndarray
    agree: np.ndarray
    disagree_intervals_deg: list[tuple[float, float]]


def agreement_report(d_vis: RadialDescriptor, d_map: RadialDescriptor,
                     shift: int = 0) -> AgreementReport:
    """Per-bin hit-type comparison at a given alignment shift.

    Disagreement runs are reported as contiguous degree intervals; an arc
    wrapping through 0 gets an end value above 360.
    """
    if d_vis.n_bins != d_map.n_bins:
        raise ValueError(f"bin counts differ: {d_vis.n_bins} vs {d_map.n_bins}")
    n = d_vis.n_bins
    cam = np.roll(d_vis.hit_labels(), shift)
    plan = d_map.hit_labels()
    agree = cam == plan
    deg = 360.0 / n
    intervals = []
    if not agree.all():
        bad = ~agree
        origin = int(np.argmin(bad)) if agree.any() else 0
        start = None
        for k in range(n + 1):
            j = (origin + k) % n
            if k < n and bad[j]:
                if start is None:
                    start = k
            elif start is not None:
                first = (origin + start) % n
                length = k - start
                intervals.append((first * deg, (first + length) * deg))
                start = None
        intervals.sort()
    agree_bins = int(agree.sum())
    return AgreementReport(shift=shift, agree_bins=agree_bins, n_bins=n,
                           fraction=agree_bins / n, camera_labels=cam,
                           map_labels=plan, agree=agree,
                           disagree_intervals_deg=intervals)


def format_agreement(report: AgreementReport) -> str:
    pct = round(100.0 * report.fraction)
    return f"{report.agree_bins} out of {report.n_bins} bins ({pct}%) agree"


def format_peak(shift: int, score: float, n_bins: int) -> str:
    deg = 360.0 * shift / n_bins
    return f"correlation peaks at {deg:.0f} deg (score {score:.4f})"


@dataclass(frozen=True)
class DescriptorStats:
    range_min_m: float
    range_max_m: float
    window_bins: int
    n_bins: int
    segment_count: int  # structural segments ~ transitions / 2
    mean_gradient: float


def descriptor_stats(d: RadialDescriptor, r_max: float = 30.0) -> DescriptorStats:
    ranges = d.channels[0] * r_max
    return DescriptorStats(range_min_m=float(ranges.min()),
                           range_max_m=float(ranges.max()),
                           window_bins=int(np.count_nonzero(d.channels[1] == 0.5)),
                           n_bins=d.n_bins,
                           segment_count=d.transition_count // 2,
                           mean_gradient=float(d.channels[2].mean()))


def format_stats(s: DescriptorStats) -> str:
    return (f"ranges from {s.range_min_m:.2f} to {s.range_max_m:.2f} m with "
            f"{s.segment_count} wall-window segments ({s.window_bins} window bins "
            f"out of {s.n_bins}); mean gradient {s.mean_gradient:.2f}")


# ---------------------------------------------------------------------------
# synthetic window-scene corpus for the detector


@dataclass(frozen=True)
class WindowSceneSpec:
    width: int = 480
    height: int = 480
    wall_mean: float = 55.0
    wall_noise: float = 8.0
    window_mean: float = 215.0
    window_noise: float = 4.0
    max_windows: int = 3
    win_width: tuple[int, int] = (50, 110)
    win_height: tuple[int, int] = (60, 140)
    margin_x: int = 70
    gap_scale: float = 0.6  # inter-window gap >= max(60, scale * (w_a + w_b))
    n_horizontal: tuple[int, int] = (2, 5)
    n_diagonal: tuple[int, int] = (1, 3)
    n_ticks: tuple[int, int] = (2, 6)


def generate_window_scene(seed: SeedLike,
                          spec: WindowSceneSpec = WindowSceneSpec()
                          ) -> tuple[np.ndarray, list[tuple[float, float, float, float]]]:
    """Textured dark wall with bright window rectangles and distractor lines.

    Returns the grayscale image and ground-truth boxes (x, y, w, h).
    Windows in one scene share a vertical band (facade-like alignment);
    distractors are horizontal lines, shallow diagonals, and short vertical
    ticks that exercise the segment detector without forming window pairs.
    """
    rng = np.random.default_rng(seed)
    w, h = spec.width, spec.height
    img = spec.wall_mean + rng.normal(0.0, spec.wall_noise, (h, w))
    img += np.linspace(-6.0, 6.0, w)[None, :]

    win_h = int(rng.integers(spec.win_height[0], spec.win_height[1] + 1))
    y0 = int(rng.uniform(0.45, 0.55) * h - win_h / 2)
    n_windows = int(rng.integers(1, spec.max_windows + 1))
    boxes = []
    cursor = spec.margin_x + int(rng.uniform(0, 30))
    prev_w = None
    for _ in range(n_windows):
        win_w = int(rng.integers(spec.win_width[0], spec.win_width[1] + 1))
        if prev_w is not None:
            cursor += int(max(60.0, spec.gap_scale * (prev_w + win_w)))
        if cursor + win_w > w - spec.margin_x:
            break
        img[y0:y0 + win_h, cursor:cursor + win_w] = \
            spec.window_mean + rng.normal(0.0, spec.window_noise, (win_h, win_w))
        boxes.append((float(cursor), float(y0), float(win_w), float(win_h)))
        cursor += win_w
        prev_w = win_w

    def clear_of_windows(x, margin=30):
        return all(not (bx - margin <= x <= bx + bw + margin) for bx, by, bw, bh in boxes)

    for _ in range(int(rng.integers(*spec.n_horizontal))):
        row = int(rng.integers(20, h - 20))
        if y0 - 15 <= row <= y0 + win_h + 15:
            continue
        level = spec.wall_mean + (25.0 if rng.random() < 0.5 else -25.0)
        img[row:row + 2, 20:w - 20] = level
    for _ in range(int(rng.integers(*spec.n_diagonal))):
        x = int(rng.integers(30, w - 120))
        row = int(rng.integers(20, h - 60))
        if not clear_of_windows(x) or not clear_of_windows(x + 100):
            continue
        for i in range(100):  # ~22 deg from horizontal, below the vertical cut
            r = row + int(0.4 * i)
            if 0 <= r < h - 1 and 0 <= x + i < w:
                img[r:r + 2, x + i] = spec.wall_mean + 30.0
    for _ in range(int(rng.integers(*spec.n_ticks))):
        x = int(rng.integers(20, w - 20))
        row = int(rng.integers(20, h - 40))
        if not clear_of_windows(x, margin=20):
            continue
        length = int(rng.integers(10, 20))
        img[row:row + length, x:x + 2] = spec.wall_mean + 35.0

    return np.clip(img, 0.0, 255.0), boxes


def match_boxes(detections, truths, iou_threshold: float = 0.5):
    """Greedy matching by score; returns (tp, fp, fn)."""
    from .windows import box_iou
    det_boxes = [d.box for d in sorted(detections,
                                       key=lambda d: -d.brightness_score)]
    unmatched = list(range(len(truths)))
    tp = fp = 0
    for box in det_boxes:
        best, best_iou = None, iou_threshold
        for gi in unmatched:
            iou = box_iou(box, truths[gi])
            if iou >= best_iou:
                best, best_iou = gi, iou
        if best is None:
            fp += 1
        else:
            tp += 1
            unmatched.remove(best)
    return tp, fp, len(unmatched)


def evaluate_window_corpus(n_images: int, det_cfg=None,
                           scene_spec: WindowSceneSpec = WindowSceneSpec(),
                           seed: int = 0, iou_threshold: float = 0.5) -> dict:
    """Precision/recall of the window detector over a synthetic corpus."""
    from .windows import WindowDetectorConfig, detect_windows
    det_cfg = det_cfg if det_cfg is not None else WindowDetectorConfig()
    ss = np.random.SeedSequence(seed)
    tp = fp = fn = 0
    for child in ss.spawn(n_images):
        img, truths = generate_window_scene(child, scene_spec)
        result = detect_windows(img, det_cfg)
        t, f, m = match_boxes(result.detections, truths, iou_threshold)
        tp, fp, fn = tp + t, fp + f, fn + m
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return {"tp": tp, "fp": fp, "fn": fn, "precision": precision, "recall": recall}
