import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subocr import metrics
from subocr.metrics import DetectionRecord, TranscriptPair, levenshtein, m_ave, stbb_correct, w_acc


def textbook_levenshtein(a, b):
    """Full DP table, the classic formulation."""
    n, m = len(a), len(b)
    d = np.zeros((n + 1, m + 1), dtype=int)
    d[:, 0] = np.arange(n + 1)
    d[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d[i, j] = min(
                d[i - 1, j] + 1,
                d[i, j - 1] + 1,
                d[i - 1, j - 1] + (a[i - 1] != b[j - 1]),
            )
    return int(d[n, m])


def rec(dt, db, dl=0, dr=0):
    truth = (100, 120, 50, 150)
    return DetectionRecord(
        detected=(100 + dt, 120 + db, 50 + dl, 150 + dr), truth=truth
    )


class TestStbbCorrect:
    def test_boundary_truth_table(self):
        # inside/outside offsets of the detection window for top and bottom
        for dt in (-4, -3, 2, 3):
            for db in (-3, -2, 3, 4):
                expected = (-3 <= dt <= 2) and (-2 <= db <= 3)
                assert stbb_correct(rec(dt, db)) is expected, (dt, db)

    def test_exact_match(self):
        assert stbb_correct(rec(0, 0))

    def test_translation_invariance(self):
        for shift in (-17, 0, 23):
            r = DetectionRecord(
                detected=(101 + shift, 122 + shift, 0, 10),
                truth=(100 + shift, 120 + shift, 0, 10),
            )
            assert stbb_correct(r) is stbb_correct(
                DetectionRecord(detected=(101, 122, 0, 10), truth=(100, 120, 0, 10))
            )


class TestMAve:
    def test_exact_matches_give_one(self):
        records = [rec(0, 0) for _ in range(3)]
        assert m_ave(records) == pytest.approx(1.0)

    def test_half_overlap(self):
        r = DetectionRecord(detected=(0, 10, 50, 150), truth=(0, 10, 0, 100))
        assert m_ave([r]) == pytest.approx(0.5)

    def test_disjoint_contributes_zero_numerator(self):
        r1 = DetectionRecord(detected=(0, 10, 200, 300), truth=(0, 10, 0, 100))
        r2 = DetectionRecord(detected=(0, 10, 0, 100), truth=(0, 10, 0, 100))
        assert m_ave([r1, r2]) == pytest.approx(200 / 400)

    def test_range(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            l1, l2 = sorted(rng.integers(0, 200, 2) + [0, 1])
            l3, l4 = sorted(rng.integers(0, 200, 2) + [0, 1])
            r = DetectionRecord(detected=(0, 10, int(l1), int(l2)), truth=(0, 10, int(l3), int(l4)))
            assert 0.0 <= m_ave([r]) <= 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            m_ave([])


class TestLevenshtein:
    def test_identical(self):
        assert levenshtein([1, 2, 3], [1, 2, 3]) == 0

    def test_kitten_sitting(self):
        # the classic pair mapped onto category ids
        encode = {c: i for i, c in enumerate("kittensg")}
        a = [encode[c] for c in "kitten"]
        b = [encode[c] for c in "sitting"]
        assert levenshtein(a, b) == 3
        assert textbook_levenshtein(a, b) == 3

    def test_empty_vs_n(self):
        assert levenshtein([], [5] * 7) == 7
        assert levenshtein([5] * 4, []) == 4

    def test_matches_textbook_dp_on_random_pairs(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            a = list(rng.integers(0, 6, rng.integers(0, 13)))
            b = list(rng.integers(0, 6, rng.integers(0, 13)))
            assert levenshtein(a, b) == textbook_levenshtein(a, b)

    @settings(max_examples=334, deadline=None)
    @given(
        a=st.lists(st.integers(0, 5), max_size=10),
        b=st.lists(st.integers(0, 5), max_size=10),
        c=st.lists(st.integers(0, 5), max_size=10),
    )
    def test_metric_axioms(self, a, b, c):
        assert levenshtein(a, b) == levenshtein(b, a)
        assert (levenshtein(a, b) == 0) == (a == b)
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


class TestWAcc:
    def test_perfect(self):
        pairs = [TranscriptPair((1, 2, 3), (1, 2, 3))]
        assert w_acc(pairs) == pytest.approx(1.0)

    def test_single_error_out_of_ten(self):
        pairs = [TranscriptPair((1, 2, 3, 4, 9), (1, 2, 3, 4, 5)), TranscriptPair((6,) * 5, (6,) * 5)]
        assert w_acc(pairs) == pytest.approx(0.9)

    def test_can_go_negative(self):
        pairs = [TranscriptPair((1, 2, 3, 4, 5, 6), (9,))]
        assert w_acc(pairs) < 0

    def test_zero_truth_rejected(self):
        with pytest.raises(ValueError):
            w_acc([TranscriptPair((1,), ())])
