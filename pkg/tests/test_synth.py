import re

import numpy as np
import pytest

from planloc.floorplan import Pose2D
from planloc.matching import MatchConfig
from planloc.raycast import HitType, RaycastConfig, cast_pose
from planloc.synth import (InfeasiblePlanError, NOISELESS,
                           ObservationNoise, PoseInStructureError,
                           SynthPlanSpec, agreement_report, descriptor_stats,
                           format_agreement, format_peak, format_stats,
                           generate_plan, generate_window_scene,
                           run_localization_eval, simulate_observation,
                           unique_candidate_indices)
from planloc.database import build_database
from planloc.raycast import RadialDescriptor, N_CHANNELS

FAST = RaycastConfig(n_bins=180, r_max=12.0, step=0.05)


class TestGeneratePlan:
    def test_deterministic(self):
        spec = SynthPlanSpec()
        a = generate_plan(spec, seed=9)
        b = generate_plan(spec, seed=9)
        assert np.array_equal(a.wall_mask, b.wall_mask)
        assert np.array_equal(a.window_mask, b.window_mask)
        c = generate_plan(spec, seed=10)
        assert not np.array_equal(a.wall_mask, c.wall_mask)

    def test_single_room_no_windows_is_wall_rectangle(self):
        spec = SynthPlanSpec(width=8.0, height=6.0, window_fraction=0.0,
                             max_depth=0)
        raster = generate_plan(spec, seed=0)
        assert raster.window_mask.sum() == 0
        t_px = round(spec.wall_thickness / spec.resolution)
        h, w = raster.shape
        assert raster.wall_mask[:t_px, :].all()
        assert raster.wall_mask[-t_px:, :].all()
        assert raster.wall_mask[:, :t_px].all()
        assert raster.wall_mask[:, -t_px:].all()
        interior = raster.wall_mask[t_px:-t_px, t_px:-t_px]
        assert not interior.any()

    def test_window_fraction_painted_length(self):
        spec = SynthPlanSpec(width=20.0, height=15.0, window_fraction=0.3,
                             max_depth=0)
        raster = generate_plan(spec, seed=4)
        painted_m = raster.window_mask[0, :].sum() * spec.resolution
        assert abs(painted_m - 0.3 * 20.0) <= spec.window_max

    def test_infeasible_window_rules(self):
        spec = SynthPlanSpec(width=2.0, height=2.0, window_min=1.5,
                             window_margin=0.5, window_fraction=0.4)
        with pytest.raises(InfeasiblePlanError):
            generate_plan(spec, seed=0)

    def test_windows_are_on_facades(self, plan_raster):
        rows, cols = np.nonzero(plan_raster.window_mask)
        h, w = plan_raster.shape
        t_px = round(0.15 / 0.02)
        on_edge = ((rows < t_px) | (rows >= h - t_px)
                   | (cols < t_px) | (cols >= w - t_px))
        assert on_edge.all()


class TestSimulateObservation:
    def test_noiseless_matches_map_hit_types(self, plan_raster):
        pose = Pose2D(5.2, 4.7, 1.1)
        obs = simulate_observation(plan_raster, pose, FAST, NOISELESS, seed=0)
        _, hits = cast_pose(plan_raster, pose, FAST)
        expected = np.where(hits == int(HitType.WINDOW), 0.5, 1.0)
        assert np.array_equal(obs.channels[1], expected)
        assert obs.active == (False, True, False, False, False)
        assert np.all(obs.channels[[0, 2, 3, 4]] == 0.0)

    def test_full_dropout_gives_all_wall(self, plan_raster):
        noise = ObservationNoise(dropout_prob=1.0)
        obs = simulate_observation(plan_raster, Pose2D(3.0, 3.0, 0.0), FAST,
                                   noise, seed=1)
        assert np.all(obs.channels[1] == 1.0)
        assert obs.transition_count == 0

    def test_determinism(self, plan_raster):
        noise = ObservationNoise(dropout_prob=0.3, spurious_rate=1.0,
                                 jitter_deg=2.0, dilation_bins=1)
        a = simulate_observation(plan_raster, Pose2D(4.0, 4.0, 0.4), FAST, noise, seed=5)
        b = simulate_observation(plan_raster, Pose2D(4.0, 4.0, 0.4), FAST, noise, seed=5)
        assert np.array_equal(a.channels, b.channels)

    def test_jitter_keeps_bins_near_noiseless_positions(self, plan_raster):
        pose = Pose2D(2.0, 13.0, 0.0)
        clean = simulate_observation(plan_raster, pose, FAST, NOISELESS, seed=0)
        clean_bins = np.nonzero(clean.channels[1] == 0.5)[0]
        assert clean_bins.size > 0
        n = FAST.n_bins
        noise = ObservationNoise(jitter_deg=1.0)
        near = total = 0
        for seed in range(100):
            obs = simulate_observation(plan_raster, pose, FAST, noise, seed=seed)
            for b in np.nonzero(obs.channels[1] == 0.5)[0]:
                dist = np.minimum((b - clean_bins) % n, (clean_bins - b) % n).min()
                near += dist <= 2
                total += 1
        assert near / total >= 0.98

    def test_dilation_grows_and_erosion_shrinks(self, plan_raster):
        pose = Pose2D(2.0, 13.0, 0.0)
        clean = simulate_observation(plan_raster, pose, FAST, NOISELESS, seed=0)
        grown = simulate_observation(plan_raster, pose, FAST,
                                     ObservationNoise(dilation_bins=2), seed=0)
        shrunk = simulate_observation(plan_raster, pose, FAST,
                                      ObservationNoise(dilation_bins=-1), seed=0)
        assert (grown.channels[1] == 0.5).sum() > (clean.channels[1] == 0.5).sum()
        assert (shrunk.channels[1] == 0.5).sum() < (clean.channels[1] == 0.5).sum()

    def test_pose_inside_wall_raises(self, plan_raster):
        with pytest.raises(PoseInStructureError):
            simulate_observation(plan_raster, Pose2D(0.05, 0.05, 0.0), FAST,
                                 NOISELESS, seed=0)

    def test_spurious_rate_adds_windows(self, plan_raster):
        pose = Pose2D(10.0, 7.0, 0.0)
        clean = simulate_observation(plan_raster, pose, FAST, NOISELESS, seed=3)
        noisy = simulate_observation(plan_raster, pose, FAST,
                                     ObservationNoise(spurious_rate=5.0), seed=3)
        assert (noisy.channels[1] == 0.5).sum() > (clean.channels[1] == 0.5).sum()


@pytest.fixture(scope="module")
def eval_setup(plan_raster):
    db = build_database(plan_raster, 1.5, FAST)
    return plan_raster, db


MC = MatchConfig(channel_mask=(1,))


class TestLocalizationEval:
    def test_noiseless_unique_poses_recover_exactly(self, eval_setup):
        raster, db = eval_setup
        report = run_localization_eval(raster, db, 40, NOISELESS, MC, seed=0)
        assert report.aggregates["rank1_rate"] == 1.0
        # yaw error is bounded by half a bin (1 deg at 180 bins)
        half_bin_deg = 0.5 * 360.0 / FAST.n_bins
        assert all(r.yaw_err_top1_deg < half_bin_deg for r in report.rows)
        top_scores = [r.score for r in report.rows]
        assert min(top_scores) > 1.0 - 1e-9

    def test_unique_indices_exclude_open_rows(self, eval_setup):
        raster, db = eval_setup
        unique = unique_candidate_indices(db)
        has_open = (db.channels[:, 1, :] == 0.0).any(axis=1)
        assert all(not has_open[k] for k in unique)

    def test_determinism_byte_for_byte(self, eval_setup, tmp_path):
        raster, db = eval_setup
        noise = ObservationNoise(dropout_prob=0.2, jitter_deg=1.0)
        a = run_localization_eval(raster, db, 25, noise, MC, seed=3)
        b = run_localization_eval(raster, db, 25, noise, MC, seed=3)
        a.to_csv(tmp_path / "a.csv")
        b.to_csv(tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_median_yaw_error_monotone_in_dropout(self, eval_setup):
        raster, db = eval_setup
        medians = []
        for p in (0.0, 0.2, 0.5):
            noise = ObservationNoise(dropout_prob=p)
            rep = run_localization_eval(raster, db, 200, noise, MC, seed=17)
            medians.append(rep.aggregates["median_yaw_err_true_deg"])
        assert medians[0] <= medians[1] <= medians[2]

    def test_windowless_plan_hit_type_is_non_informative(self):
        # rooms but no glazing, r_max beyond the plan diagonal: every ray
        # terminates at a wall, so all hit-type rows are identical
        spec = SynthPlanSpec(window_fraction=0.0)
        raster = generate_plan(spec, seed=6)
        cfg = RaycastConfig(n_bins=180, r_max=30.0, step=0.05)
        db = build_database(raster, 1.5, cfg)
        assert np.all(db.channels[:, 1, :] == 1.0)
        hit_only = run_localization_eval(raster, db, 60, NOISELESS, MC, seed=2,
                                         query_mode="map")
        assert hit_only.aggregates["median_yaw_err_top1_deg"] > 30.0
        assert hit_only.aggregates["rank1_rate"] < 0.2

        full = run_localization_eval(raster, db, 60, NOISELESS,
                                     MatchConfig(), seed=2, query_mode="map")
        assert full.aggregates["rank1_rate"] > hit_only.aggregates["rank1_rate"]
        assert full.aggregates["rank1_rate"] > 0.9


def hit_row_descriptor(labels):
    ch = np.zeros((N_CHANNELS, len(labels)))
    ch[1] = labels
    return RadialDescriptor(channels=ch, transition_count=0,
                            active=(False, True, False, False, False))


class TestReports:
    def test_identical_rows_agree_everywhere(self):
        d = hit_row_descriptor([1.0] * 300 + [0.5] * 60)
        rep = agreement_report(d, d, 0)
        assert rep.agree_bins == 360
        assert rep.fraction == 1.0
        assert rep.disagree_intervals_deg == []
        assert format_agreement(rep) == "360 out of 360 bins (100%) agree"

    def test_disagreement_interval_formatting(self):
        a = [1.0] * 360
        b = [1.0] * 360
        for j in range(110, 150):
            b[j] = 0.5
        rep = agreement_report(hit_row_descriptor(a), hit_row_descriptor(b), 0)
        assert rep.agree_bins == 320
        assert rep.disagree_intervals_deg == [(110.0, 150.0)]
        assert re.fullmatch(r"320 out of 360 bins \(89%\) agree",
                            format_agreement(rep))

    def test_wrapping_disagreement_interval(self):
        a = [1.0] * 360
        b = list(a)
        for j in list(range(355, 360)) + list(range(0, 5)):
            b[j] = 0.5
        rep = agreement_report(hit_row_descriptor(a), hit_row_descriptor(b), 0)
        assert rep.disagree_intervals_deg == [(355.0, 365.0)]

    def test_shift_is_applied_to_camera_row(self):
        base = [1.0] * 350 + [0.5] * 10
        cam = hit_row_descriptor(np.roll(base, -25))
        plan = hit_row_descriptor(base)
        rep = agreement_report(cam, plan, 25)
        assert rep.fraction == 1.0

    def test_descriptor_stats(self, plan_raster):
        from planloc.raycast import compute_descriptor
        d = compute_descriptor(plan_raster, Pose2D(10.0, 7.5, 0.0), FAST)
        stats = descriptor_stats(d, FAST.r_max)
        ranges = d.channels[0] * FAST.r_max
        assert stats.range_min_m == pytest.approx(float(ranges.min()))
        assert stats.range_max_m == pytest.approx(float(ranges.max()))
        assert stats.window_bins == int((d.channels[1] == 0.5).sum())
        assert stats.segment_count == d.transition_count // 2
        line = format_stats(stats)
        assert re.search(r"ranges from \d+\.\d\d to \d+\.\d\d m", line)
        assert re.search(r"\(\d+ window bins out of 180\)", line)

    def test_peak_format(self):
        assert format_peak(0, 0.9486, 360) == "correlation peaks at 0 deg (score 0.9486)"
        assert format_peak(90, 0.5, 360) == "correlation peaks at 90 deg (score 0.5000)"


class TestWindowScene:
    def test_deterministic(self):
        a_img, a_boxes = generate_window_scene(3)
        b_img, b_boxes = generate_window_scene(3)
        assert np.array_equal(a_img, b_img)
        assert a_boxes == b_boxes

    def test_boxes_are_within_image_and_bright(self):
        img, boxes = generate_window_scene(21)
        assert boxes
        h, w = img.shape
        for (x, y, bw, bh) in boxes:
            assert 0 <= x and x + bw <= w
            assert 0 <= y and y + bh <= h
            interior = img[int(y):int(y + bh), int(x):int(x + bw)]
            assert interior.mean() > 180.0


class TestNoiseValidation:
    @pytest.mark.parametrize("kwargs", [
        dict(dropout_prob=1.5),
        dict(dropout_prob=-0.1),
        dict(spurious_rate=-1.0),
        dict(jitter_deg=-0.5),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ObservationNoise(**kwargs)
