import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import square_room
from planloc.database import (EmptyDatabaseError, build_database,
                              DescriptorDatabase)
from planloc.matching import (EmptyFilterError, MatchConfig, MatchShapeError,
                              best_shift_fft, correlation_curve,
                              hit_type_agreement, match_query,
                              similarity_at_shift)
from planloc.raycast import N_CHANNELS, RadialDescriptor, RaycastConfig

CFG = MatchConfig()


def random_descriptor(rng, n=360, active=(True,) * 5):
    ch = rng.random((N_CHANNELS, n))
    for c in range(N_CHANNELS):
        if not active[c]:
            ch[c] = 0.0
    return RadialDescriptor(channels=ch, transition_count=0, active=active)


def shifted(d, k):
    """Descriptor as seen after rotating the heading by k bins."""
    return RadialDescriptor(channels=np.roll(d.channels, -k, axis=1),
                            transition_count=d.transition_count, active=d.active)


class TestSimilarity:
    def test_self_similarity_is_one(self, rng):
        d = random_descriptor(rng)
        assert similarity_at_shift(d, d, 0, CFG) == pytest.approx(1.0, abs=1e-12)

    def test_exact_cyclic_alignment(self, rng):
        b = random_descriptor(rng)
        a = shifted(b, 90)
        assert similarity_at_shift(a, b, 90, CFG) == pytest.approx(1.0, abs=1e-12)

    def test_zero_row_conventions(self, rng):
        an = rng.random((N_CHANNELS, 36))
        bn = rng.random((N_CHANNELS, 36))
        an[2] = 0.0
        bn[2] = 0.0  # both zero -> cosine 1
        an[4] = 0.0  # one zero  -> cosine 0
        a = RadialDescriptor(channels=an, transition_count=0)
        b = RadialDescriptor(channels=bn, transition_count=0)
        only2 = MatchConfig(channel_mask=(2,))
        only4 = MatchConfig(channel_mask=(4,))
        assert similarity_at_shift(a, b, 0, only2) == 1.0
        assert similarity_at_shift(a, b, 0, only4) == 0.0
        assert best_shift_fft(a, b, only2)[1] == pytest.approx(1.0)
        assert best_shift_fft(a, b, only4)[1] == pytest.approx(0.0, abs=1e-12)

    def test_shape_mismatch_raises(self, rng):
        a = random_descriptor(rng, n=360)
        b = random_descriptor(rng, n=180)
        with pytest.raises(MatchShapeError):
            similarity_at_shift(a, b, 0, CFG)
        with pytest.raises(MatchShapeError):
            best_shift_fft(a, b, CFG)

    def test_no_common_active_channel_raises(self, rng):
        a = random_descriptor(rng, active=(True, False, True, True, True))
        b = random_descriptor(rng, active=(False, True, False, False, False))
        with pytest.raises(MatchShapeError):
            similarity_at_shift(a, b, 0, CFG)

    def test_weight_renormalization_over_active_channels(self, rng):
        # hit-type-only descriptors still score 1.0 against themselves
        a = random_descriptor(rng, active=(False, True, False, False, False))
        assert similarity_at_shift(a, a, 0, CFG) == pytest.approx(1.0, abs=1e-12)


class TestBestShiftFFT:
    def test_identical_descriptors(self, rng):
        d = random_descriptor(rng)
        assert best_shift_fft(d, d, CFG) == (0, pytest.approx(1.0, abs=1e-12))

    def test_recovers_random_shifts(self, rng):
        for _ in range(100):
            base = random_descriptor(rng)
            k = int(rng.integers(0, 360))
            shift, score = best_shift_fft(shifted(base, k), base, CFG)
            assert shift == k
            assert score == pytest.approx(1.0, abs=1e-9)

    def test_agrees_with_brute_force(self, rng):
        for _ in range(30):
            a, b = random_descriptor(rng, n=90), random_descriptor(rng, n=90)
            curve = correlation_curve(a, b, CFG)
            brute = np.array([similarity_at_shift(a, b, s, CFG) for s in range(90)])
            assert np.abs(curve - brute).max() < 1e-9
            assert int(np.argmax(curve)) == int(np.argmax(brute))

    def test_flattened_mode_agrees_with_brute_force(self, rng):
        cfg = MatchConfig(flatten=True)
        for _ in range(10):
            a, b = random_descriptor(rng, n=60), random_descriptor(rng, n=60)
            curve = correlation_curve(a, b, cfg)
            brute = np.array([similarity_at_shift(a, b, s, cfg) for s in range(60)])
            assert np.abs(curve - brute).max() < 1e-9

    def test_constant_rows_tie_resolves_to_smallest_shift(self):
        ch = np.full((N_CHANNELS, 36), 0.5)
        d = RadialDescriptor(channels=ch, transition_count=0)
        assert best_shift_fft(d, d, CFG)[0] == 0

    def test_scale_invariance(self, rng):
        a, b = random_descriptor(rng), random_descriptor(rng)
        base = correlation_curve(a, b, CFG)
        a2 = RadialDescriptor(channels=a.channels.copy(), transition_count=0)
        b2 = RadialDescriptor(channels=b.channels.copy(), transition_count=0)
        a2.channels[3] *= 7.5
        b2.channels[3] *= 7.5
        assert np.abs(correlation_curve(a2, b2, CFG) - base).max() < 1e-9


def small_database(rng, m=25, n=72):
    channels = rng.random((m, N_CHANNELS, n))
    transitions = rng.integers(0, 20, m)
    cells = np.column_stack([np.arange(m, dtype=float), np.zeros(m)])
    return DescriptorDatabase(cells=cells, channels=channels,
                              transition_counts=transitions, yaw_anchor=0.0,
                              grid_step=1.0, cfg=RaycastConfig(n_bins=n))


class TestMatchQuery:
    def test_database_member_ranks_first(self, rng):
        db = small_database(rng)
        query = db.descriptor(7)
        results = match_query(query, db, MatchConfig(top_k=3))
        assert results[0].candidate_index == 7
        assert results[0].best_shift == 0
        assert results[0].score == pytest.approx(1.0, abs=1e-9)

    def test_shifted_member_recovers_yaw(self, rng):
        db = small_database(rng)
        k = 30
        query = shifted(db.descriptor(4), k)
        top = match_query(query, db, MatchConfig(top_k=1))[0]
        assert top.candidate_index == 4
        assert top.best_shift == k
        expected_yaw = (db.yaw_anchor + 2 * math.pi * k / db.n_bins) % (2 * math.pi)
        assert top.yaw == pytest.approx(expected_yaw, abs=1e-12)

    def test_ranking_invariant_under_query_rotation(self, rng):
        db = small_database(rng)
        query = random_descriptor(rng, n=72)
        base = match_query(query, db, MatchConfig(top_k=len(db)))
        k = 17
        rotated = match_query(shifted(query, k), db, MatchConfig(top_k=len(db)))
        assert [r.candidate_index for r in rotated] == [r.candidate_index for r in base]
        for r0, r1 in zip(base, rotated):
            assert r1.best_shift == (r0.best_shift + k) % db.n_bins
            assert r1.score == pytest.approx(r0.score, abs=1e-9)

    def test_prefilter_drops_distant_signatures_only(self, rng):
        db = small_database(rng)
        query = db.descriptor(3)
        tol0 = MatchConfig(prefilter_tolerance=0, top_k=len(db))
        results = match_query(query, db, tol0)
        kept = {r.candidate_index for r in results}
        expected = {i for i in range(len(db))
                    if db.transition_counts[i] == query.transition_count}
        assert kept == expected
        assert 3 in kept  # equal signature never filtered

    def test_prefilter_can_empty_the_candidate_set(self, rng):
        db = small_database(rng)
        query = random_descriptor(rng, n=72)
        object.__setattr__(query, "transition_count", 10_000)
        with pytest.raises(EmptyFilterError):
            match_query(query, db, MatchConfig(prefilter_tolerance=0))

    def test_empty_database_raises(self, rng):
        db = small_database(rng, m=25)
        empty = DescriptorDatabase(cells=db.cells[:0], channels=db.channels[:0],
                                   transition_counts=db.transition_counts[:0],
                                   yaw_anchor=0.0, grid_step=1.0, cfg=db.cfg)
        with pytest.raises(EmptyDatabaseError):
            match_query(random_descriptor(rng, n=72), empty, CFG)

    def test_tie_breaks_by_candidate_index(self, rng):
        db = small_database(rng, m=6)
        db.channels[4] = db.channels[2]  # exact duplicate candidates
        db.transition_counts[4] = db.transition_counts[2]
        results = match_query(db.descriptor(2), db, MatchConfig(top_k=3))
        assert results[0].candidate_index == 2
        assert results[1].candidate_index == 4
        assert results[0].score == pytest.approx(results[1].score, abs=1e-12)

    def test_hit_type_only_query_against_raster_db(self, rng):
        # r_max beyond the room diagonal: every ray terminates, so the
        # camera-view row (open -> wall) equals the map row exactly
        room = square_room(10.0, 0.1, wall_px=2, window_rows=(20, 45))
        cfg = RaycastConfig(n_bins=72, r_max=15.0, step=0.05)
        db = build_database(room, 2.0, cfg)
        vis = np.zeros((N_CHANNELS, 72))
        vis[1] = np.where(db.channels[3][1] == 0.5, 0.5, 1.0)
        query = RadialDescriptor(channels=vis, transition_count=0,
                                 active=(False, True, False, False, False))
        results = match_query(query, db, MatchConfig(channel_mask=(1,), top_k=1))
        assert results[0].candidate_index == 3
        assert results[0].score == pytest.approx(1.0, abs=1e-6)


class TestHitTypeAgreement:
    def make(self, labels):
        ch = np.zeros((N_CHANNELS, len(labels)))
        ch[1] = np.asarray([{0: 0.0, 1: 1.0, 2: 0.5}[v] for v in labels])
        return RadialDescriptor(channels=ch, transition_count=0)

    def test_identical_rows(self):
        d = self.make([1] * 30 + [2] * 6)
        assert hit_type_agreement(d, d, 0) == (36, 1.0)

    def test_complementary_rows(self):
        a = self.make([1] * 36)
        b = self.make([2] * 36)
        assert hit_type_agreement(a, b, 0) == (0, 0.0)

    def test_shift_realigns(self):
        labels = [1] * 30 + [2] * 6
        a = self.make(np.roll(labels, -5))
        b = self.make(labels)
        assert hit_type_agreement(a, b, 5) == (36, 1.0)
        agree, frac = hit_type_agreement(a, b, 0)
        assert agree < 36


class TestMatchConfig:
    @pytest.mark.parametrize("kwargs", [
        dict(channel_weights=(0.5, 0.5, 0.0, 0.0)),
        dict(channel_weights=(0.5, 0.5, 0.5, -0.5, 0.0)),
        dict(channel_weights=(0.1,) * 5),
        dict(channel_mask=()),
        dict(channel_mask=(9,)),
        dict(top_k=0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            MatchConfig(**kwargs)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(0, 59))
def test_property_fft_equals_brute_force(seed, k):
    rng = np.random.default_rng(seed)
    a = random_descriptor(rng, n=60)
    b = shifted(a, k)
    curve = correlation_curve(b, a, CFG)
    assert int(np.argmax(curve)) == k
    brute = np.array([similarity_at_shift(b, a, s, CFG) for s in range(60)])
    assert np.abs(curve - brute).max() < 1e-9
