import itertools
import math

import numpy as np
import pytest

from subocr import decode
from subocr.decode import DecodeConfig, dp_decode, group_score, train_lm
from subocr.recognize import CharCandidate, LatticeNode


class TestTrigramLM:
    def test_single_sequence_counts(self):
        delta = 0.25
        lm = train_lm([[0, 1]], alphabet_size=3, delta=delta)
        # P(1 | start, 0) = (1 + d) / (1 + d*z), z = alphabet + start token
        start = lm.start_token
        assert lm.prob(start, 0, 1) == pytest.approx((1 + delta) / (1 + delta * lm.z))

    def test_unseen_context_is_uniform(self):
        lm = train_lm([[0, 1]], alphabet_size=5, delta=0.1)
        assert lm.prob(2, 3, 4) == pytest.approx(1.0 / lm.z)

    def test_conditionals_sum_to_one(self):
        rng = np.random.default_rng(0)
        corpus = [list(rng.integers(0, 8, rng.integers(1, 12))) for _ in range(30)]
        lm = train_lm(corpus, alphabet_size=8, delta=0.1)
        contexts = [(int(rng.integers(0, 9)), int(rng.integers(0, 9))) for _ in range(100)]
        for c1, c2 in contexts:
            total = sum(lm.prob(c1, c2, c3) for c3 in range(lm.z))
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_rejects_empty_corpus(self):
        with pytest.raises(ValueError):
            train_lm([], alphabet_size=4)

    def test_rejects_out_of_alphabet(self):
        with pytest.raises(ValueError):
            train_lm([[0, 9]], alphabet_size=4)


class TestGroupScore:
    def _uniform_lm(self, z=4):
        return train_lm([[0]], alphabet_size=z, delta=1000.0)  # near-uniform

    def test_gamma_zero_is_pure_recognition(self):
        lm = train_lm([[0, 1, 2]], alphabet_size=4, delta=0.1)
        assert group_score(lm, 0, 1, 2, 0.37, 0.0) == pytest.approx(math.log(0.37))

    def test_gamma_one_uniform_lm(self):
        lm = self._uniform_lm(4)
        s = group_score(lm, 1, 2, 3, 0.9, 1.0)
        assert s == pytest.approx(math.log(lm.prob(1, 2, 3)))

    def test_published_mixture_value(self):
        # direct evaluation: 0.3*ln(0.1) + 0.7*ln(0.5) = -1.17598 (i.e. -1.1760)
        class Fixed:
            def prob(self, c1, c2, c3):
                return 0.1

        val = 0.3 * math.log(0.1) + 0.7 * math.log(0.5)
        assert group_score(Fixed(), 0, 0, 0, 0.5, 0.3) == pytest.approx(val, abs=1e-12)
        assert val == pytest.approx(-1.17598, abs=1e-4)

    def test_rejects_nonpositive_rprob(self):
        lm = self._uniform_lm()
        with pytest.raises(ValueError):
            group_score(lm, 0, 0, 0, 0.0, 0.3)


def enumerate_paths(lattice, lm, w, cfg):
    """Exhaustive decoding reference: every start node, every step chain,
    every candidate assignment; same terminal rule and fallback as the DP."""
    if not lattice:
        return [], decode.NO_SCORE
    nodes = sorted(lattice, key=lambda n: (n.a, n.b))
    start_slack = cfg.start_slack if cfg.start_slack is not None else w / 2
    end_slack = cfg.end_slack if cfg.end_slack is not None else w / 2
    min_a = nodes[0].a
    max_b = max(n.b for n in nodes)
    steps = tuple(w + o for o in cfg.step_offsets)
    start = lm.start_token

    index_paths = []

    def extend(path):
        extended = False
        last = nodes[path[-1]]
        for j, node in enumerate(nodes):
            if node.a - last.a in steps:
                extend(path + [j])
                extended = True
        index_paths.append((list(path), extended))

    for i, node in enumerate(nodes):
        if node.a <= min_a + start_slack:
            extend([i])

    best_terminal = None
    best_any = None
    for path, _ in index_paths:
        choice_sets = [nodes[i].candidates for i in path]
        for combo in itertools.product(*choice_sets):
            c1, c2 = start, start
            total = 0.0
            for cand in combo:
                total += group_score(lm, c1, c2, cand.category, cand.rprob, cfg.gamma)
                c1, c2 = c2, cand.category
            score = total / len(combo)
            text = tuple(c.category for c in combo)
            entry = (score, text)
            if best_any is None or score > best_any[0]:
                best_any = entry
            if nodes[path[-1]].b >= max_b - end_slack:
                if best_terminal is None or score > best_terminal[0]:
                    best_terminal = entry
    best = best_terminal or best_any
    return list(best[1]), best[0]


def random_lattice(rng, w=10, max_nodes=8, max_cands=5):
    """Realistic small lattice: spine nodes at roughly w-pitch plus noise."""
    nodes = []
    a = int(rng.integers(0, 3))
    for _ in range(int(rng.integers(1, max_nodes + 1))):
        width = w + int(rng.integers(-1, 2))
        n_cands = int(rng.integers(1, max_cands + 1))
        cats = rng.choice(12, size=n_cands, replace=False)
        probs = rng.uniform(0.06, 1.0, n_cands)
        probs = probs / probs.sum() * rng.uniform(0.5, 1.0)
        probs = np.clip(probs, 0.051, 0.99)
        cands = tuple(
            CharCandidate(int(c), float(p))
            for c, p in sorted(zip(cats, probs), key=lambda t: -t[1])
        )
        nodes.append(LatticeNode(a=a, b=a + width, candidates=cands))
        a += int(rng.choice([w - 2, w - 1, w, w - 2, w]))
        if len(nodes) >= max_nodes:
            break
    return nodes


class TestDpDecode:
    def test_empty_lattice(self):
        lm = train_lm([[0]], alphabet_size=4)
        text, score = dp_decode([], lm, 10)
        assert text == [] and score == decode.NO_SCORE

    def test_single_node_argmax(self):
        lm = train_lm([[0]], alphabet_size=4, delta=1000.0)  # near-uniform LM
        node = LatticeNode(a=0, b=10, candidates=(CharCandidate(1, 0.7), CharCandidate(2, 0.3)))
        text, score = dp_decode([node], lm, 10)
        assert text == [1]

    def test_uniform_lm_follows_per_node_argmax_chain(self):
        lm = train_lm([[0]], alphabet_size=6, delta=1e7)  # effectively uniform
        rng = np.random.default_rng(1)
        nodes = []
        for k in range(5):
            cats = rng.choice(6, 3, replace=False)
            cands = tuple(
                CharCandidate(int(c), p) for c, p in zip(cats, (0.6, 0.25, 0.1))
            )
            nodes.append(LatticeNode(a=10 * k, b=10 * k + 10, candidates=cands))
        text, _ = dp_decode(nodes, lm, 10)
        assert text == [n.candidates[0].category for n in nodes]

    def test_language_model_breaks_ties(self):
        lm = train_lm([[1, 2, 3]] * 50, alphabet_size=6, delta=0.01)
        nodes = [
            LatticeNode(0, 10, (CharCandidate(1, 0.5), CharCandidate(4, 0.5))),
            LatticeNode(10, 20, (CharCandidate(2, 0.5), CharCandidate(5, 0.5))),
            LatticeNode(20, 30, (CharCandidate(3, 0.5),)),
        ]
        text, _ = dp_decode(nodes, lm, 10, DecodeConfig(gamma=0.5))
        assert text == [1, 2, 3]

    def test_monotone_positions(self):
        rng = np.random.default_rng(4)
        lm = train_lm([list(rng.integers(0, 12, 8)) for _ in range(20)], alphabet_size=12)
        for _ in range(30):
            lattice = random_lattice(rng)
            text, score = dp_decode(lattice, lm, 10)
            assert len(text) >= 1

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(99)
        lm = train_lm([list(rng.integers(0, 12, 10)) for _ in range(25)], alphabet_size=12)
        cfg = DecodeConfig()
        matches = 0
        trials = 200
        for _ in range(trials):
            lattice = random_lattice(rng)
            got_text, got_score = dp_decode(lattice, lm, 10, cfg)
            ref_text, ref_score = enumerate_paths(lattice, lm, 10, cfg)
            if tuple(got_text) == tuple(ref_text):
                matches += 1
                assert got_score == pytest.approx(ref_score, abs=1e-9)
        assert matches / trials >= 0.95


class TestLmSerialization:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        corpus = [list(rng.integers(0, 10, rng.integers(1, 9))) for _ in range(40)]
        lm = train_lm(corpus, alphabet_size=10, delta=0.1)
        path = tmp_path / "lm.subl"
        decode.save_lm(lm, path)
        back = decode.load_lm(path)
        assert back.alphabet_size == lm.alphabet_size
        assert back.delta == lm.delta
        assert back.trigram == lm.trigram
        assert back.bigram == lm.bigram
        # save(load(x)) is byte-identical
        path2 = tmp_path / "lm2.subl"
        decode.save_lm(back, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_rejects_bad_magic(self, tmp_path):
        p = tmp_path / "junk.subl"
        p.write_bytes(b"NOPE" + b"\0" * 40)
        with pytest.raises(ValueError):
            decode.load_lm(p)
