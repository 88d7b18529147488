"""Roll/pitch from vanishing points of line segments on the unit sphere.

Each image segment maps to the great circle of bearings through its
endpoints; parallel 3D lines share a common direction where their circles
intersect. RANSAC over circle-normal cross products finds that direction;
the vertical vanishing point is the gravity direction in the camera frame
(image y points down, so a level camera has gravity ~ (0, 1, 0)).

Angle conventions: pitch = atan2(g_z, g_y) (nose down positive),
roll = atan2(-g_x, hypot(g_y, g_z)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fisheye import CameraModel, CameraRig, rotate_about_vertical, unproject
from .segments import LineSegment


class DegenerateSegmentError(ValueError):
    """Segment endpoints unproject to (anti)parallel bearings."""


class VanishingPointError(ValueError):
    """RANSAC could not find a consistent vanishing point."""


class UnsupportedAttitudeError(ValueError):
    """Gravity direction implies a tilt beyond 90 degrees."""


class NoAttitudeError(ValueError):
    """Neither camera produced a usable vertical vanishing point."""


@dataclass(frozen=True)
class GreatCircle:
    normal: np.ndarray  # unit 3-vector

    def __post_init__(self):
        n = np.linalg.norm(self.normal)
        if not math.isclose(n, 1.0, abs_tol=1e-9):
            raise ValueError(f"great-circle normal must be unit, |n| = {n}")


@dataclass(frozen=True)
class VanishingPoint:
    direction: np.ndarray  # unit, canonicalized
    inlier_indices: tuple[int, ...]
    inlier_count: int
    # consensus of the raw winning hypothesis, before least-squares refinement
    hypothesis_inliers: tuple[int, ...] = ()


@dataclass(frozen=True)
class AttitudeEstimate:
    roll: float
    pitch: float
    gravity: np.ndarray  # unit, body frame, g_y > 0
    inlier_count: int
    source: str  # "front+back", "front", or "back"


@dataclass(frozen=True)
class AttitudeConfig:
    angular_tolerance: float = math.radians(2.0)
    iterations: int = 300
    seed: int = 0
    vertical_cone: float = math.radians(30.0)  # around image-down (0, 1, 0)


def canonicalize_direction(v: np.ndarray) -> np.ndarray:
    """Identify v with -v: keep y >= 0, tie-break z >= 0 then x >= 0."""
    for comp in (v[1], v[2], v[0]):
        if comp > 0:
            return v
        if comp < 0:
            return -v
    return v


def segment_to_great_circle(cam: CameraModel, seg: LineSegment) -> GreatCircle:
    """Plane normal through the camera center and both endpoint bearings."""
    b1 = unproject(cam, (seg.x1, seg.y1))
    b2 = unproject(cam, (seg.x2, seg.y2))
    n = np.cross(b1, b2)
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise DegenerateSegmentError(
            f"segment ({seg.x1:.1f},{seg.y1:.1f})-({seg.x2:.1f},{seg.y2:.1f}) "
            f"spans (anti)parallel bearings")
    return GreatCircle(normal=n / norm)


def circles_from_segments(cam: CameraModel,
                          segments: list[LineSegment]) -> list[GreatCircle]:
    """Great circles for all non-degenerate segments."""
    circles = []
    for seg in segments:
        try:
            circles.append(segment_to_great_circle(cam, seg))
        except DegenerateSegmentError:
            continue
    return circles


def _refine_direction(normals: np.ndarray) -> np.ndarray:
    """Least-squares direction minimizing sum (n . v)^2: smallest eigenvector."""
    scatter = normals.T @ normals
    _, vecs = np.linalg.eigh(scatter)
    return vecs[:, 0]


def ransac_vanishing_point(circles: list[GreatCircle],
                           angular_tolerance: float = math.radians(2.0),
                           iterations: int = 300, seed: int = 0,
                           axis_hint: np.ndarray | None = None,
                           hint_max_angle: float = math.radians(30.0)) -> VanishingPoint:
    """RANSAC intersection direction of great circles.

    Hypotheses are cross products of sampled normal pairs; a circle is an
    inlier when |normal . vp| < sin(tolerance). The winner is refined by
    the smallest eigenvector of its inliers' scatter matrix, and inliers
    are recomputed for the refined direction. With ``axis_hint`` set, only
    hypotheses within ``hint_max_angle`` of the hint (up to sign) compete.
    Deterministic for a fixed seed.
    """
    m = len(circles)
    if m < 2:
        raise VanishingPointError(f"need at least 2 great circles, got {m}")
    normals = np.stack([c.normal for c in circles])
    sin_tol = math.sin(angular_tolerance)
    cos_hint = math.cos(hint_max_angle)
    rng = np.random.default_rng(seed)

    best_count = 0
    best_inliers = None
    for _ in range(iterations):
        i = int(rng.integers(m))
        j = int(rng.integers(m - 1))
        if j >= i:
            j += 1
        v = np.cross(normals[i], normals[j])
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            continue
        v /= norm
        if axis_hint is not None and abs(float(v @ axis_hint)) < cos_hint:
            continue
        inliers = np.abs(normals @ v) < sin_tol
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
    if best_inliers is None or best_count < 2:
        raise VanishingPointError(
            f"no hypothesis with >= 2 inliers after {iterations} iterations")

    refined = canonicalize_direction(_refine_direction(normals[best_inliers]))
    final = np.abs(normals @ refined) < sin_tol
    if int(final.sum()) < 2:
        # refinement collapsed the consensus; keep the raw hypothesis inliers
        final = best_inliers
    idx = tuple(int(i) for i in np.nonzero(final)[0])
    hyp = tuple(int(i) for i in np.nonzero(best_inliers)[0])
    return VanishingPoint(direction=refined, inlier_indices=idx,
                          inlier_count=len(idx), hypothesis_inliers=hyp)


def find_vanishing_points(circles: list[GreatCircle], n_vps: int = 3,
                          angular_tolerance: float = math.radians(2.0),
                          iterations: int = 300, seed: int = 0) -> list[VanishingPoint]:
    """Sequential RANSAC: extract up to ``n_vps`` VPs, removing inliers each round.

    Returns VPs in extraction order with inlier indices into the original
    circle list. The vertical VP is typically the one nearest (0, 1, 0);
    horizontal VPs are reported for diagnostics only.
    """
    remaining = list(range(len(circles)))
    found = []
    for round_idx in range(n_vps):
        if len(remaining) < 2:
            break
        subset = [circles[i] for i in remaining]
        try:
            vp = ransac_vanishing_point(subset, angular_tolerance, iterations,
                                        seed + round_idx)
        except VanishingPointError:
            break
        original = tuple(remaining[i] for i in vp.inlier_indices)
        found.append(VanishingPoint(direction=vp.direction, inlier_indices=original,
                                    inlier_count=len(original)))
        inlier_set = set(vp.inlier_indices)
        remaining = [remaining[i] for i in range(len(remaining)) if i not in inlier_set]
    if not found:
        raise VanishingPointError("no vanishing point found")
    return found


_IMAGE_DOWN = np.array([0.0, 1.0, 0.0])


def estimate_vertical_vp(circles: list[GreatCircle],
                         cfg: AttitudeConfig = AttitudeConfig(),
                         seed: int | None = None) -> VanishingPoint:
    """Vertical VP: best consensus within the cone around image-down."""
    return ransac_vanishing_point(circles, cfg.angular_tolerance, cfg.iterations,
                                  cfg.seed if seed is None else seed,
                                  axis_hint=_IMAGE_DOWN, hint_max_angle=cfg.vertical_cone)


def roll_pitch_from_gravity(vp: VanishingPoint, yaw_offset: float = 0.0,
                            source: str = "front") -> AttitudeEstimate:
    """Extract roll/pitch from a vertical VP, expressed in the body frame.

    The VP direction is sign-fixed so gravity points image-down (g_y > 0);
    a non-positive g_y means the camera is tilted past 90 degrees, which
    this parametrization does not support.
    """
    g = canonicalize_direction(vp.direction)
    g = rotate_about_vertical(g, yaw_offset)  # y component unchanged
    if g[1] <= 0:
        raise UnsupportedAttitudeError("gravity has no image-down component; tilt >= 90 deg")
    pitch = math.atan2(float(g[2]), float(g[1]))
    roll = math.atan2(-float(g[0]), math.hypot(float(g[1]), float(g[2])))
    return AttitudeEstimate(roll=roll, pitch=pitch, gravity=g,
                            inlier_count=vp.inlier_count, source=source)


def gravity_from_roll_pitch(roll: float, pitch: float) -> np.ndarray:
    """Forward model matching roll_pitch_from_gravity's conventions."""
    return np.array([-math.sin(roll),
                     math.cos(roll) * math.cos(pitch),
                     math.cos(roll) * math.sin(pitch)])


def estimate_attitude_dual(front_segments: list[LineSegment],
                           back_segments: list[LineSegment],
                           rig: CameraRig,
                           cfg: AttitudeConfig = AttitudeConfig()) -> AttitudeEstimate:
    """Fuse per-camera vertical VPs into one roll/pitch estimate.

    Back-camera gravity rotates into the body frame through the rig yaw
    offset; the fusion is an inlier-count-weighted normalized vector sum.
    If one camera fails (too few verticals), the other's estimate is
    returned flagged single-source.
    """
    per_camera = []
    for idx, (name, segments) in enumerate((("front", front_segments),
                                            ("back", back_segments))):
        try:
            rig_cam = rig[name]
        except KeyError:
            continue
        circles = circles_from_segments(rig_cam.model, segments)
        if len(circles) < 2:
            continue
        try:
            vp = estimate_vertical_vp(circles, cfg, seed=cfg.seed + idx)
        except VanishingPointError:
            continue
        est = roll_pitch_from_gravity(vp, rig_cam.yaw_offset, source=name)
        per_camera.append(est)

    if not per_camera:
        raise NoAttitudeError("no camera yielded a vertical vanishing point")
    if len(per_camera) == 1:
        return per_camera[0]

    a, b = per_camera
    gb = b.gravity if float(a.gravity @ b.gravity) >= 0 else -b.gravity
    fused = a.inlier_count * a.gravity + b.inlier_count * gb
    norm = np.linalg.norm(fused)
    if norm < 1e-12 or fused[1] <= 0:
        raise NoAttitudeError("camera gravity estimates disagree irreconcilably")
    g = fused / norm
    pitch = math.atan2(float(g[2]), float(g[1]))
    roll = math.atan2(-float(g[0]), math.hypot(float(g[1]), float(g[2])))
    return AttitudeEstimate(roll=roll, pitch=pitch, gravity=g,
                            inlier_count=a.inlier_count + b.inlier_count,
                            source="front+back")
