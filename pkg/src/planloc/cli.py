"""Command-line entry point.

Subcommands: gen-plan, build-db, describe, match, detect-windows, attitude,
eval. Every output file embeds a header with the tool version and the
effective configuration; every subcommand is deterministic given identical
inputs and seeds.

Exit codes: 0 success, 1 usage/config error, 2 empty-result condition,
3 I/O failure. Relative output paths resolve under $PLANLOC_OUTDIR when it
is set.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__, attitude, database, fisheye, matching, svgplot, synth, windows
from .floorplan import FloorPlanError, Pose2D, load_plan_with_sidecar, save_plan_png
from .raycast import RaycastConfig, compute_descriptor
from .segments import detect_segments, load_segments_csv, save_segments_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_EMPTY = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _out_path(path: str) -> Path:
    base = os.environ.get("PLANLOC_OUTDIR")
    p = Path(path)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _config_comment(args: argparse.Namespace) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return json.dumps(cfg, default=str)


def _write_csv(path: Path, header_lines: list[str], columns: list[str],
               rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _header_lines(args: argparse.Namespace) -> list[str]:
    return [f"planloc {__version__}", f"config: {_config_comment(args)}"]


def _raycast_cfg(args: argparse.Namespace) -> RaycastConfig:
    return RaycastConfig(n_bins=args.n_bins, r_max=args.r_max, step=args.step,
                         r_clip=args.r_clip, sigma_clip=args.sigma_clip,
                         var_halfwidth=args.var_halfwidth)


def _add_raycast_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-bins", type=int, default=360)
    p.add_argument("--r-max", type=float, default=30.0)
    p.add_argument("--step", type=float, default=0.02)
    p.add_argument("--r-clip", type=float, default=5.0)
    p.add_argument("--sigma-clip", type=float, default=10.0)
    p.add_argument("--var-halfwidth", type=int, default=5)


def _load_gray(path: str) -> tuple[np.ndarray, np.ndarray | None]:
    """Grayscale float image plus the color array when the file carries color."""
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    gray = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    color = rgb if not np.allclose(rgb[..., 0], rgb[..., 1]) else None
    return gray, color


def cmd_gen_plan(args) -> int:
    spec = synth.SynthPlanSpec(width=args.width, height=args.height,
                               resolution=args.resolution,
                               window_fraction=args.window_fraction,
                               max_depth=args.depth)
    raster = synth.generate_plan(spec, seed=args.seed)
    out = _out_path(args.out)
    save_plan_png(raster, out)
    print(f"wrote {out} ({raster.shape[1]}x{raster.shape[0]} px, "
          f"{args.resolution} m/px) and sidecar")
    return EXIT_OK


def cmd_build_db(args) -> int:
    raster = load_plan_with_sidecar(args.plan, args.meta)
    cfg = _raycast_cfg(args)
    t0 = time.perf_counter()
    db = database.build_database(raster, args.grid_step, cfg,
                                 yaw_anchor=math.radians(args.yaw_anchor_deg),
                                 clearance=args.clearance)
    dt = time.perf_counter() - t0
    out = _out_path(args.out)
    database.save_database(db, out, extra={"config": _config_comment(args)})
    if args.json_out:
        database.database_to_json(db, _out_path(args.json_out))
    print(f"{len(db)} candidates in {dt:.2f} s -> {out}")
    return EXIT_OK


def cmd_describe(args) -> int:
    raster = load_plan_with_sidecar(args.plan, args.meta)
    cfg = _raycast_cfg(args)
    pose = Pose2D(args.x, args.y, math.radians(args.yaw_deg))
    desc = compute_descriptor(raster, pose, cfg)
    out = _out_path(args.out)
    database.save_query_descriptor(desc, out, pose_xy=(pose.x, pose.y), cfg=cfg,
                                   extra={"pose_yaw_deg": args.yaw_deg,
                                          "config": _config_comment(args)})
    print(f"descriptor (n_bins={cfg.n_bins}, r_max={cfg.r_max}, step={cfg.step}) -> {out}")
    if args.stats:
        print(synth.format_stats(synth.descriptor_stats(desc, cfg.r_max)))
    if args.svg:
        svg = svgplot.descriptor_svg(desc, cfg.r_max, comment=_config_comment(args))
        _out_path(args.svg).write_text(svg)
    return EXIT_OK


def cmd_match(args) -> int:
    query, _ = database.load_query_descriptor(args.query)
    db = database.load_database(args.db)
    weights = tuple(args.weights) if args.weights else (0.2,) * 5
    cfg = matching.MatchConfig(channel_weights=weights,
                               channel_mask=tuple(args.channels),
                               prefilter_tolerance=args.prefilter_tol,
                               top_k=args.top_k, flatten=args.flatten)
    results = matching.match_query(query, db, cfg)
    rows = [[r.candidate_index, f"{r.x:.4f}", f"{r.y:.4f}",
             f"{math.degrees(r.yaw):.3f}", f"{r.score:.6f}"] for r in results]
    _write_csv(_out_path(args.out), _header_lines(args),
               ["candidate_index", "x", "y", "yaw_deg", "score"], rows)
    best = results[0]
    print(synth.format_peak(best.best_shift, best.score, db.n_bins)
          + f" at candidate {best.candidate_index} ({best.x:.2f}, {best.y:.2f})")
    if args.curve_out:
        curve = matching.correlation_curve(query, db.descriptor(best.candidate_index), cfg)
        crows = [[s, f"{360.0 * s / db.n_bins:.3f}", f"{curve[s]:.6f}"]
                 for s in range(db.n_bins)]
        _write_csv(_out_path(args.curve_out), _header_lines(args),
                   ["shift_bins", "shift_deg", "score"], crows)
    return EXIT_OK


def cmd_detect_windows(args) -> int:
    gray, color = _load_gray(args.image)
    cfg = windows.WindowDetectorConfig()
    pp = fov_r = None
    if args.camera_config and args.camera:
        rig = fisheye.load_rig(args.camera_config)
        cam = rig[args.camera].model
        pp = (cam.cx, cam.cy)
        fov_r = min(cam.fov_radius(), min(cam.width, cam.height) / 2.0)
    result = windows.detect_windows(gray, cfg, camera_id=args.camera or "",
                                    color_image=color, principal_point=pp,
                                    fov_radius=fov_r)
    out = _out_path(args.out)
    windows.save_detections_csv(result.detections, out, _header_lines(args))
    if args.segments_out:
        save_segments_csv(result.segments, _out_path(args.segments_out))
    if args.overlay_svg:
        svg = svgplot.overlay_svg(gray.shape, result.segments,
                                  result.window_segment_indices(),
                                  result.detections, result.band,
                                  comment=_config_comment(args))
        _out_path(args.overlay_svg).write_text(svg)
    print(f"{len(result.segments)} segments, {len(result.detections)} windows -> {out}")
    return EXIT_OK


def cmd_attitude(args) -> int:
    rig = fisheye.load_rig(args.rig)
    det_cfg = windows.WindowDetectorConfig()

    def segments_for(image_arg, csv_arg):
        if csv_arg:
            return load_segments_csv(csv_arg)
        if image_arg:
            gray, _ = _load_gray(image_arg)
            return detect_segments(gray, min_length=det_cfg.min_segment_length,
                                   gradient_threshold=det_cfg.gradient_threshold)
        return []

    front = segments_for(args.front_image, args.front_segments)
    back = segments_for(args.back_image, args.back_segments)
    cfg = attitude.AttitudeConfig(angular_tolerance=math.radians(args.tolerance_deg),
                                  iterations=args.iterations, seed=args.seed)
    est = attitude.estimate_attitude_dual(front, back, rig, cfg)
    rows = [[f"{math.degrees(est.roll):.3f}", f"{math.degrees(est.pitch):.3f}",
             f"{est.gravity[0]:.6f}", f"{est.gravity[1]:.6f}", f"{est.gravity[2]:.6f}",
             est.inlier_count, est.source]]
    _write_csv(_out_path(args.out), _header_lines(args),
               ["roll_deg", "pitch_deg", "g_x", "g_y", "g_z", "inliers", "source"], rows)
    print(f"roll {math.degrees(est.roll):+.2f} deg, pitch {math.degrees(est.pitch):+.2f} deg "
          f"({est.inlier_count} inliers, {est.source})")
    if args.vps_out or args.svg:
        # per-camera VP extraction: the vertical VP plus horizontal ones
        # (the latter are diagnostic only; yaw comes from descriptor matching)
        vp_rows = []
        front_circles = None
        front_vps = []
        for name, segs in (("front", front), ("back", back)):
            circles = attitude.circles_from_segments(rig[name].model, segs)
            if len(circles) < 2:
                continue
            try:
                vps = attitude.find_vanishing_points(
                    circles, n_vps=3, seed=args.seed,
                    angular_tolerance=cfg.angular_tolerance,
                    iterations=cfg.iterations)
            except attitude.VanishingPointError:
                continue
            if name == "front":
                front_circles, front_vps = circles, vps
            for i, vp in enumerate(vps):
                d = vp.direction
                vp_rows.append([name, i, f"{d[0]:.6f}", f"{d[1]:.6f}",
                                f"{d[2]:.6f}", vp.inlier_count])
        if args.vps_out:
            _write_csv(_out_path(args.vps_out), _header_lines(args),
                       ["camera", "vp_index", "d_x", "d_y", "d_z", "inliers"],
                       vp_rows)
        if args.svg and front_circles:
            svg = svgplot.sphere_svg(front_circles, front_vps,
                                     comment=_config_comment(args))
            _out_path(args.svg).write_text(svg)
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.plan:
        raster = load_plan_with_sidecar(args.plan, args.meta)
    else:
        spec = synth.SynthPlanSpec()
        raster = synth.generate_plan(spec, seed=args.plan_seed)
    cfg = _raycast_cfg(args)
    db = database.build_database(raster, args.grid_step, cfg)
    noise = synth.ObservationNoise(dropout_prob=args.dropout,
                                   spurious_rate=args.spurious,
                                   jitter_deg=args.jitter_deg,
                                   dilation_bins=args.dilation)
    match_cfg = matching.MatchConfig(channel_mask=(1,))
    report = synth.run_localization_eval(raster, db, args.trials, noise,
                                         match_cfg, seed=args.seed, cfg=cfg)
    report.to_csv(_out_path(args.out), _header_lines(args))
    print(report.summary_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="planloc",
                     description="floor-plan localization toolkit")
    parser.add_argument("--version", action="version", version=f"planloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-plan", help="generate a synthetic floor plan PNG + sidecar")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=float, default=20.0)
    p.add_argument("--height", type=float, default=15.0)
    p.add_argument("--resolution", type=float, default=0.02)
    p.add_argument("--window-fraction", type=float, default=0.35)
    p.add_argument("--depth", type=int, default=2)
    p.set_defaults(func=cmd_gen_plan)

    p = sub.add_parser("build-db", help="ray cast a descriptor database from a plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--meta", default=None, help="sidecar JSON (default <plan>.json)")
    p.add_argument("--grid-step", type=float, default=0.5)
    p.add_argument("--clearance", type=float, default=0.3)
    p.add_argument("--yaw-anchor-deg", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--json-out", default=None)
    _add_raycast_args(p)
    p.set_defaults(func=cmd_build_db)

    p = sub.add_parser("describe", help="compute one descriptor at a pose")
    p.add_argument("--plan", required=True)
    p.add_argument("--meta", default=None)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--yaw-deg", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--svg", default=None)
    p.add_argument("--stats", action="store_true")
    _add_raycast_args(p)
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("match", help="rank database candidates against a query")
    p.add_argument("--query", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--curve-out", default=None,
                   help="dump the full correlation curve of the best candidate")
    p.add_argument("--channels", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--weights", type=float, nargs=5, default=None)
    p.add_argument("--prefilter-tol", type=int, default=None)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--flatten", action="store_true")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("detect-windows", help="detect windows in a fisheye frame")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--overlay-svg", default=None)
    p.add_argument("--segments-out", default=None)
    p.add_argument("--camera-config", default=None, help="rig JSON for periphery filter")
    p.add_argument("--camera", default=None, help="camera name within the rig")
    p.set_defaults(func=cmd_detect_windows)

    p = sub.add_parser("attitude", help="roll/pitch from vanishing points")
    p.add_argument("--rig", required=True)
    p.add_argument("--front-image", default=None)
    p.add_argument("--back-image", default=None)
    p.add_argument("--front-segments", default=None, help="segment CSV alternative")
    p.add_argument("--back-segments", default=None)
    p.add_argument("--tolerance-deg", type=float, default=2.0)
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--vps-out", default=None,
                   help="also dump per-camera vanishing points as CSV")
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_attitude)

    p = sub.add_parser("eval", help="synthetic end-to-end localization evaluation")
    p.add_argument("--plan", default=None)
    p.add_argument("--meta", default=None)
    p.add_argument("--plan-seed", type=int, default=0)
    p.add_argument("--grid-step", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--spurious", type=float, default=0.0)
    p.add_argument("--jitter-deg", type=float, default=0.0)
    p.add_argument("--dilation", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_raycast_args(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (matching.EmptyFilterError, database.EmptyDatabaseError,
            attitude.NoAttitudeError, attitude.VanishingPointError) as exc:
        print(f"planloc: empty result: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (OSError, database.DatabaseFormatError) as exc:
        print(f"planloc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FloorPlanError, ValueError, KeyError) as exc:
        print(f"planloc: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
