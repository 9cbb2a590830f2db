import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subocr import cwt
from subocr.cwt import CwtConfig, ColumnSums, LmpSet


def brute_pairwise(cols, w_min, w_max):
    out = []
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            d = abs(cols[i] - cols[j])
            if w_min < d < w_max:
                out.append(d)
    return sorted(out)


class TestColumnSums:
    def test_all_ones(self):
        frame = np.ones((10, 7), dtype=np.uint8)
        s = cwt.column_sums(frame, 2, 3)
        assert np.array_equal(s.values, np.full(7, 3))

    def test_all_zeros(self):
        frame = np.zeros((10, 7), dtype=np.uint8)
        assert not cwt.column_sums(frame, 0, 4).values.any()

    def test_single_ink_row(self):
        frame = np.zeros((10, 8), dtype=np.uint8)
        frame[4, [1, 3, 6]] = 1
        s = cwt.column_sums(frame, 3, 3)
        expected = np.zeros(8, dtype=np.int64)
        expected[[1, 3, 6]] = 1
        assert np.array_equal(s.values, expected)

    def test_window_out_of_range(self):
        frame = np.zeros((10, 7), dtype=np.uint8)
        with pytest.raises(ValueError):
            cwt.column_sums(frame, 8, 3)


class TestFindLmps:
    def test_strict_local_min(self):
        sums = ColumnSums(0, np.array([2, 1, 2]))
        assert list(cwt.find_lmps(sums, 30).columns) == [1]

    def test_long_zero_run_removed(self):
        values = np.concatenate([[3, 2, 3], np.zeros(40, dtype=int), [3, 2, 3]])
        lmps = cwt.find_lmps(ColumnSums(0, values), 30)
        # the 40-zero run disappears; the two strict minima stay
        assert list(lmps.columns) == [1, 44]

    def test_short_runs_kept(self):
        sums = ColumnSums(0, np.array([3, 0, 3, 0, 3]))
        assert list(cwt.find_lmps(sums, 30).columns) == [1, 3]

    def test_borders_only_via_zero_rule(self):
        sums = ColumnSums(0, np.array([0, 5, 4, 5, 0]))
        assert list(cwt.find_lmps(sums, 30).columns) == [0, 2, 4]

    def test_run_at_threshold_removed(self):
        values = np.ones(20, dtype=int) * 5
        values[4:7] = 0  # run of exactly 3
        lmps = cwt.find_lmps(ColumnSums(0, values), 3)
        assert list(lmps.columns) == []

    def test_run_below_threshold_kept(self):
        values = np.ones(20, dtype=int) * 5
        values[4:6] = 0  # run of 2 < 3
        lmps = cwt.find_lmps(ColumnSums(0, values), 3)
        assert list(lmps.columns) == [4, 5]


class TestPairwiseDistances:
    def test_range_filter(self):
        lmps = LmpSet(0, np.array([0, 10, 100]))
        d = cwt.pairwise_distances(lmps, 5, 40)
        assert list(d.distances) == [10]

    def test_empty(self):
        d = cwt.pairwise_distances(LmpSet(0, np.array([], dtype=int)), 5, 40)
        assert d.distances.size == 0

    def test_matches_brute_force_on_grid(self):
        cols = np.arange(30) * 16
        d = cwt.pairwise_distances(LmpSet(0, cols), 5, 40)
        assert list(d.distances) == brute_pairwise(list(cols), 5, 40)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 200), min_size=0, max_size=25, unique=True))
    def test_matches_brute_force_random(self, cols):
        cols = np.array(sorted(cols), dtype=int)
        d = cwt.pairwise_distances(LmpSet(0, cols), 5, 40)
        assert list(d.distances) == brute_pairwise(list(cols), 5, 40)


class TestAccumulate:
    def _ink_frame(self, seed=0):
        rng = np.random.default_rng(seed)
        frame = (rng.random((20, 120)) < 0.08).astype(np.uint8)
        return frame

    def test_single_frame_equals_per_frame_counts(self):
        frame = self._ink_frame()
        cfg = CwtConfig(h=3, w_min=5, w_max=40)
        hists = cwt.accumulate_histograms([frame], cfg)
        assert len(hists) == 20 - 3 + 1
        for hist in hists:
            sums = cwt.column_sums(frame, hist.row_top, 3)
            lmps = cwt.find_lmps(sums, cfg.run_removal_len)
            dists = cwt.pairwise_distances(lmps, 5, 40)
            expected = np.bincount(dists.distances, minlength=42)
            assert np.array_equal(hist.counts, expected)

    def test_duplicated_frame_doubles_counts(self):
        frame = self._ink_frame(1)
        cfg = CwtConfig(h=3)
        one = cwt.accumulate_histograms([frame], cfg)
        two = cwt.accumulate_histograms([frame, frame], cfg)
        for h1, h2 in zip(one, two):
            assert np.array_equal(h2.counts, 2 * h1.counts)

    def test_additivity_over_frame_partition(self):
        frames = [self._ink_frame(s) for s in range(4)]
        cfg = CwtConfig(h=3)
        whole = cwt.accumulate_histograms(frames, cfg)
        first = cwt.accumulate_histograms(frames[:2], cfg)
        second = cwt.accumulate_histograms(frames[2:], cfg)
        for hw, ha, hb in zip(whole, first, second):
            assert np.array_equal(hw.counts, ha.counts + hb.counts)

    def test_translation_invariance(self):
        frame = np.zeros((10, 200), dtype=np.uint8)
        frame[3:7, 40:120] = (np.random.default_rng(5).random((4, 80)) < 0.3).astype(np.uint8)
        shifted = np.roll(frame, 30, axis=1)
        cfg = CwtConfig(h=3)
        a = cwt.accumulate_histograms([frame], cfg)
        b = cwt.accumulate_histograms([shifted], cfg)
        for ha, hb in zip(a, b):
            assert np.array_equal(ha.counts, hb.counts)

    def test_size_mismatch_rejected(self):
        cfg = CwtConfig(h=3)
        with pytest.raises(ValueError):
            cwt.accumulate_histograms(
                [np.zeros((10, 20), dtype=np.uint8), np.zeros((10, 21), dtype=np.uint8)], cfg
            )

    def test_empty_frame_list_rejected(self):
        with pytest.raises(ValueError):
            cwt.accumulate_histograms([], CwtConfig(h=3))


def test_config_validation():
    with pytest.raises(ValueError):
        CwtConfig(h=0)
    with pytest.raises(ValueError):
        CwtConfig(h=3, w_min=40, w_max=5)
    with pytest.raises(ValueError):
        CwtConfig(h=3, run_removal_len=1)
