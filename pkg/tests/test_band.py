import numpy as np
import pytest

from subocr import band
from subocr.band import BandCandidate, BandConfig, PeakTable
from subocr.cwt import CwtHistogram


def make_hist(counts, w_min=5, w_max=40):
    arr = np.zeros(w_max + 2, dtype=np.int64)
    for w, c in counts.items():
        arr[w] = c
    return CwtHistogram(row_top=0, w_min=w_min, w_max=w_max, counts=arr)


class TestFindPeaks:
    def test_symmetric_peak_lands_on_bin(self):
        hist = make_hist({15: 2, 16: 4, 17: 2})
        row = band.find_peaks_row(hist, 5, 40)
        assert row[16] == pytest.approx(16.0)
        assert row[15] == 0.0 and row[17] == 0.0

    def test_asymmetric_interpolation(self):
        # U(4)=2, U(5)=4, U(6)=3 -> q = 5 + 0.5*(2-3)/(2-8+3) = 5.1667
        hist = make_hist({4: 2, 5: 4, 6: 3}, w_min=4, w_max=10)
        row = band.find_peaks_row(hist, 4, 10)
        assert row[5] == pytest.approx(5 + 0.5 * (2 - 3) / (2 - 8 + 3))
        assert row[5] == pytest.approx(5.1667, abs=1e-4)

    def test_all_zero_histogram_has_no_peaks(self):
        row = band.find_peaks_row(make_hist({}), 5, 40)
        assert not row.any()

    def test_flat_plateau_takes_bin_position(self):
        hist = make_hist({19: 3, 20: 3, 21: 3})
        row = band.find_peaks_row(hist, 5, 40)
        assert row[20] == pytest.approx(20.0)

    def test_interpolated_positions_stay_within_half_bin(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            counts = {w: int(rng.integers(0, 30)) for w in range(5, 41)}
            row = band.find_peaks_row(make_hist(counts), 5, 40)
            nz = row[row > 0]
            bins = np.flatnonzero(row > 0)
            assert np.all(np.abs(nz - bins) <= 0.5 + 1e-12)


def table_from_rows(rows, n_rows, w_max=40):
    q = np.zeros((n_rows, w_max + 2))
    for (i, j), v in rows.items():
        q[i, j] = v
    return PeakTable(w_min=5, w_max=w_max, q=q)


class TestChainCandidates:
    def test_constant_peak_column(self):
        # peaks at rows 10..30, all at bin 16; h=3, min_height=12
        rows = {(i, 16): 16.0 for i in range(10, 31)}
        table = table_from_rows(rows, 40)
        cfg = BandConfig(min_height=12)
        cands = band.chain_candidates(table, cfg, h=3)
        assert BandCandidate(top=10, bottom=32, scw=16) in cands
        # every candidate from this single column carries scw 16
        assert all(c.scw == 16 for c in cands)

    def test_short_chain_rejected(self):
        rows = {(i, 16): 16.0 for i in range(10, 16)}  # chain of 5 past the seed
        table = table_from_rows(rows, 40)
        cands = band.chain_candidates(table, BandConfig(min_height=12), h=3)
        assert cands == set()

    def test_empty_table(self):
        table = table_from_rows({}, 20)
        assert band.chain_candidates(table, BandConfig(), h=3) == set()

    def test_chain_follows_adjacent_bins(self):
        rows = {}
        for k, i in enumerate(range(5, 25)):
            rows[(i, 16 + (k % 2))] = 16.0 + (k % 2)  # alternate bins 16/17
        table = table_from_rows(rows, 40)
        cands = band.chain_candidates(table, BandConfig(min_height=12), h=3)
        assert any(c.top == 5 for c in cands)

    def test_nearest_mode_differs_on_forks(self):
        # row 11 offers both 15.0 and 17.4 next to a seed at 16.0
        rows = {(10, 16): 16.0, (11, 15): 15.0, (11, 17): 17.4}
        table = table_from_rows(rows, 14)
        far = band.chain_candidates(table, BandConfig(min_height=2, chain_select="farthest"), h=3)
        near = band.chain_candidates(table, BandConfig(min_height=2, chain_select="nearest"), h=3)
        far_scw = {c.scw for c in far if c.top == 10}
        near_scw = {c.scw for c in near if c.top == 10}
        # farthest picks 17.4 (|17.4-16|=1.4), nearest picks 15.0 -> medians differ
        assert far_scw != near_scw


class TestPostprocess:
    def test_overlapping_similar_scw_keeps_taller(self):
        tall = BandCandidate(top=150, bottom=170, scw=16)
        short = BandCandidate(top=154, bottom=168, scw=16)
        out = band.postprocess({tall, short}, frame_height=240)
        assert out == {tall}

    def test_double_scw_eliminated(self):
        base = BandCandidate(top=200, bottom=220, scw=16)
        doubled = BandCandidate(top=200, bottom=220, scw=32)
        out = band.postprocess({base, doubled}, frame_height=360)
        assert out == {base}

    def test_upper_half_eliminated(self):
        upper = BandCandidate(top=10, bottom=30, scw=16)
        lower = BandCandidate(top=200, bottom=220, scw=16)
        out = band.postprocess({upper, lower}, frame_height=240)
        assert out == {lower}

    def test_non_overlapping_similar_scw_both_survive(self):
        a = BandCandidate(top=150, bottom=170, scw=16)
        b = BandCandidate(top=200, bottom=220, scw=16)
        assert band.postprocess({a, b}, frame_height=240) == {a, b}

    def test_double_scw_outside_tolerance_survives(self):
        a = BandCandidate(top=200, bottom=220, scw=16)
        b = BandCandidate(top=200, bottom=220, scw=40)  # 2.5x, beyond 15%
        out = band.postprocess({a, b}, frame_height=360)
        assert out == {a, b}

    def test_order_independence(self):
        rng = np.random.default_rng(7)
        cands = {
            BandCandidate(top=int(t), bottom=int(t) + int(h), scw=int(s))
            for t, h, s in zip(
                rng.integers(100, 200, 12), rng.integers(13, 30, 12), rng.integers(6, 39, 12)
            )
        }
        expected = band.postprocess(cands, 360)
        for _ in range(5):
            shuffled = list(cands)
            rng.shuffle(shuffled)
            assert band.postprocess(set(shuffled), 360) == expected


def test_candidate_invariants_on_random_tables():
    rng = np.random.default_rng(3)
    cfg = BandConfig(min_height=6)
    for _ in range(20):
        q = np.zeros((30, 42))
        mask = rng.random((30, 36)) < 0.3
        jitter = rng.uniform(-0.5, 0.5, (30, 36))
        cols = np.arange(5, 41)[None, :] + jitter
        q[:, 5:41] = np.where(mask, cols, 0.0)
        for cand in band.chain_candidates(PeakTable(w_min=5, w_max=40, q=q), cfg, h=3):
            assert cand.bottom - cand.top >= cfg.min_height
            assert cfg.w_min <= cand.scw <= cfg.w_max
