"""Fisheye camera model, bearing geometry, and the visual hit-type channel.

The projection follows the radially symmetric polynomial model
r = f * (theta + k1*theta^3 + k2*theta^5 + k3*theta^7 + k4*theta^9); all
zero coefficients give the pure equidistant model r = f*theta. Camera
frame: x right, y down (image vertical), z along the optical axis. The
azimuth of a bearing is atan2(b_x, b_z), so a camera mounted with yaw
offset delta about the body vertical axis adds delta to every azimuth;
the back camera (delta = pi) maps (x, y, z) -> (-x, y, -z).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .raycast import N_CHANNELS, RadialDescriptor, transitions_of_labels

DEGENERATE_EPS = 1e-6  # |b_x|, |b_z| below this: azimuth undefined


class OutOfFovError(ValueError):
    """Bearing lies beyond the camera's maximum incidence angle."""


class DegenerateBoxError(ValueError):
    """Detection box has no width or height."""


@dataclass(frozen=True)
class CameraModel:
    focal: float
    cx: float
    cy: float
    width: int
    height: int
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    k4: float = 0.0
    theta_max: float = math.radians(95.0)

    def __post_init__(self):
        if not self.focal > 0:
            raise ValueError("focal length must be positive")
        if not 0.0 < self.theta_max <= math.pi:
            raise ValueError("theta_max must be in (0, pi]")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")

    @property
    def distortion(self) -> tuple[float, float, float, float]:
        return (self.k1, self.k2, self.k3, self.k4)

    def poly(self, theta):
        t2 = theta * theta
        return theta * (1.0 + t2 * (self.k1 + t2 * (self.k2 + t2 * (self.k3 + t2 * self.k4))))

    def poly_deriv(self, theta):
        t2 = theta * theta
        return 1.0 + t2 * (3.0 * self.k1 + t2 * (5.0 * self.k2 + t2 * (7.0 * self.k3
                                                                       + t2 * 9.0 * self.k4)))

    def _invert_poly(self, target: float, max_iter: int = 10, tol: float = 1e-10) -> float:
        """Solve poly(theta) = target by Newton iteration (poly assumed monotone)."""
        theta = min(target, self.theta_max)
        for _ in range(max_iter):
            step = (self.poly(theta) - target) / self.poly_deriv(theta)
            theta -= step
            if abs(step) < tol:
                break
        return theta

    def fov_radius(self) -> float:
        """Image radius of the FoV circle in pixels."""
        return self.focal * float(self.poly(self.theta_max))


def unproject(cam: CameraModel, pixel: tuple[float, float]) -> np.ndarray:
    """Pixel -> unit bearing. Pixels beyond the FoV circle clamp to theta_max."""
    dx = pixel[0] - cam.cx
    dy = pixel[1] - cam.cy
    r = math.hypot(dx, dy)
    target = r / cam.focal
    if cam.k1 == cam.k2 == cam.k3 == cam.k4 == 0.0:
        theta = min(target, cam.theta_max)
    else:
        theta = min(cam._invert_poly(target), cam.theta_max)
    phi = math.atan2(dy, dx)
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def project(cam: CameraModel, bearing: np.ndarray) -> tuple[float, float]:
    """Unit bearing -> pixel; raises OutOfFovError beyond theta_max."""
    bz = min(max(float(bearing[2]), -1.0), 1.0)
    theta = math.acos(bz)
    if theta > cam.theta_max + 1e-12:
        raise OutOfFovError(f"incidence angle {math.degrees(theta):.2f} deg "
                            f"exceeds {math.degrees(cam.theta_max):.2f} deg")
    r = cam.focal * float(cam.poly(theta))
    denom = math.hypot(float(bearing[0]), float(bearing[1]))
    if denom < 1e-15:
        return cam.cx, cam.cy
    return cam.cx + r * float(bearing[0]) / denom, cam.cy + r * float(bearing[1]) / denom


def azimuth_of(bearing: np.ndarray) -> float:
    """atan2(b_x, b_z) normalized to [0, 2pi). 0 is straight ahead."""
    return math.atan2(float(bearing[0]), float(bearing[2])) % (2.0 * math.pi)


def is_degenerate_azimuth(bearing: np.ndarray) -> bool:
    """Near-vertical bearings have no meaningful azimuth."""
    return abs(float(bearing[0])) < DEGENERATE_EPS and abs(float(bearing[2])) < DEGENERATE_EPS


def rotate_about_vertical(bearing: np.ndarray, yaw: float) -> np.ndarray:
    """Rotate about the body vertical (image y) axis; adds ``yaw`` to the azimuth."""
    c, s = math.cos(yaw), math.sin(yaw)
    x, y, z = float(bearing[0]), float(bearing[1]), float(bearing[2])
    return np.array([x * c + z * s, y, -x * s + z * c])


@dataclass(frozen=True)
class RigCamera:
    name: str
    model: CameraModel
    yaw_offset: float  # optical axis yaw in the body frame; front 0, back pi

    def __post_init__(self):
        object.__setattr__(self, "yaw_offset", float(self.yaw_offset) % (2.0 * math.pi))


@dataclass(frozen=True)
class CameraRig:
    cameras: tuple[RigCamera, ...]

    def __getitem__(self, name: str) -> RigCamera:
        for cam in self.cameras:
            if cam.name == name:
                return cam
        raise KeyError(f"no camera named {name!r} in rig")


@dataclass(frozen=True)
class AzimuthSpan:
    """Directed arc: ``width`` radians counterclockwise from ``start``.

    Spans always take the shorter arc between two edge azimuths, so
    width <= pi; arcs may wrap through zero.
    """

    start: float
    width: float

    def __post_init__(self):
        object.__setattr__(self, "start", float(self.start) % (2.0 * math.pi))


def detection_to_span(cam: CameraModel, yaw_offset: float, det) -> AzimuthSpan:
    """Azimuth interval subtended by a window detection box.

    Unprojects the midpoints of the box's left and right edges, rotates the
    bearings by the camera's yaw offset, and returns the shorter arc
    between the two azimuths.
    """
    if det.b_w <= 0 or det.b_h <= 0:
        raise DegenerateBoxError(f"box {det.b_x, det.b_y, det.b_w, det.b_h} has no extent")
    ymid = det.b_y + det.b_h / 2.0
    b_left = rotate_about_vertical(unproject(cam, (det.b_x, ymid)), yaw_offset)
    b_right = rotate_about_vertical(unproject(cam, (det.b_x + det.b_w, ymid)), yaw_offset)
    if is_degenerate_azimuth(b_left) or is_degenerate_azimuth(b_right):
        raise DegenerateBoxError("box edge bearing is vertical; azimuth undefined")
    a_left = azimuth_of(b_left)
    a_right = azimuth_of(b_right)
    delta = (a_right - a_left + math.pi) % (2.0 * math.pi) - math.pi
    if delta >= 0:
        return AzimuthSpan(a_left, delta)
    return AzimuthSpan(a_right, -delta)


def spans_to_hit_type(spans: list[AzimuthSpan], n_bins: int) -> np.ndarray:
    """Rasterize azimuth spans into a hit-type row (0.5 window, 1.0 wall).

    Bin j covers [ (j-0.5)*2pi/n, (j+0.5)*2pi/n ); a bin becomes window if
    any span overlaps its interval. Overlapping spans union; exact
    boundary touches round half-up (toward the higher bin).
    """
    if n_bins < 8:
        raise ValueError(f"n_bins must be >= 8, got {n_bins}")
    row = np.ones(n_bins)
    width_inv = n_bins / (2.0 * math.pi)
    for span in spans:
        if span.width >= 2.0 * math.pi:
            row[:] = 0.5
            continue
        s = span.start * width_inv
        e = (span.start + span.width) * width_inv
        j_first = math.floor(s - 0.5) + 1
        j_last = math.floor(e + 0.5)
        for j in range(j_first, j_last + 1):
            row[j % n_bins] = 0.5
    return row


def build_visual_descriptor(front_dets: list, back_dets: list, rig: CameraRig,
                            n_bins: int = 360) -> RadialDescriptor:
    """Hit-type-only descriptor from dual-camera window detections.

    Channel 1 carries the rasterized spans; channels 0, 2, 3, 4 stay zero
    and are marked inactive so matching skips them. Front/back evidence
    unions (window wins over the wall default).
    """
    front = rig["front"]
    back = rig["back"]
    spans = [detection_to_span(front.model, front.yaw_offset, d) for d in front_dets]
    spans += [detection_to_span(back.model, back.yaw_offset, d) for d in back_dets]
    row = spans_to_hit_type(spans, n_bins)
    channels = np.zeros((N_CHANNELS, n_bins))
    channels[1] = row
    labels = np.where(row == 0.5, 2, 1).astype(np.int8)
    return RadialDescriptor(channels=channels,
                            transition_count=transitions_of_labels(labels),
                            active=(False, True, False, False, False))


def load_rig(path: str | Path) -> CameraRig:
    """Read a JSON rig config: per camera f, c_x, c_y, k1..k4, theta_max_deg,
    yaw_offset_deg, width, height."""
    with open(path) as fh:
        data = json.load(fh)
    cams = []
    for entry in data["cameras"]:
        model = CameraModel(focal=float(entry["f"]),
                            cx=float(entry["c_x"]), cy=float(entry["c_y"]),
                            width=int(entry["width"]), height=int(entry["height"]),
                            k1=float(entry.get("k1", 0.0)), k2=float(entry.get("k2", 0.0)),
                            k3=float(entry.get("k3", 0.0)), k4=float(entry.get("k4", 0.0)),
                            theta_max=math.radians(float(entry.get("theta_max_deg", 95.0))))
        cams.append(RigCamera(name=str(entry["name"]), model=model,
                              yaw_offset=math.radians(float(entry.get("yaw_offset_deg", 0.0)))))
    return CameraRig(cameras=tuple(cams))


def save_rig(rig: CameraRig, path: str | Path) -> None:
    entries = []
    for cam in rig.cameras:
        m = cam.model
        entries.append({
            "name": cam.name, "f": m.focal, "c_x": m.cx, "c_y": m.cy,
            "k1": m.k1, "k2": m.k2, "k3": m.k3, "k4": m.k4,
            "theta_max_deg": math.degrees(m.theta_max),
            "yaw_offset_deg": math.degrees(cam.yaw_offset),
            "width": m.width, "height": m.height,
        })
    with open(path, "w") as fh:
        json.dump({"cameras": entries}, fh, indent=2)
        fh.write("\n")
