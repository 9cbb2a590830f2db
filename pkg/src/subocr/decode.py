"""Character trigram language model and lattice decoding.

The decoder walks the recognition lattice left to right, stepping w-2, w-1
or w pixels between window left edges, scoring every appended character by
a mixture of log language probability and log recognition probability, and
keeps only the best-scoring state per (end position, last two characters,
path length).  The winning sentence maximizes the length-normalized sum of
those mixture scores.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .recognize import LatticeNode

LM_MAGIC = b"SUBL"
LM_VERSION = 1

NO_SCORE = float("-inf")


@dataclass
class TrigramLM:
    """Additively smoothed trigram counts.

    z counts the emittable alphabet plus the sentence-start token, so the
    smoothed conditionals sum to one over that full support.  start_token
    is the id used to pad the two positions before a sentence.
    """

    alphabet_size: int
    delta: float
    trigram: Counter = field(repr=False)
    bigram: Counter = field(repr=False)

    @property
    def start_token(self) -> int:
        return self.alphabet_size

    @property
    def z(self) -> int:
        return self.alphabet_size + 1

    def prob(self, c1: int, c2: int, c3: int) -> float:
        """P(c3 | c1 c2) = (count(c1 c2 c3) + delta) / (count(c1 c2) + delta*z)."""
        return (self.trigram[(c1, c2, c3)] + self.delta) / (
            self.bigram[(c1, c2)] + self.delta * self.z
        )


def train_lm(corpus: list[list[int]], alphabet_size: int, delta: float = 0.1) -> TrigramLM:
    """Count trigrams over the corpus; sequences get two start-token pads."""
    if not corpus:
        raise ValueError("empty corpus")
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    start = alphabet_size
    trigram: Counter = Counter()
    bigram: Counter = Counter()
    for seq in corpus:
        if any(not 0 <= c < alphabet_size for c in seq):
            raise ValueError("corpus contains out-of-alphabet ids")
        ctx1, ctx2 = start, start
        for c in seq:
            trigram[(ctx1, ctx2, c)] += 1
            bigram[(ctx1, ctx2)] += 1
            ctx1, ctx2 = ctx2, c
    return TrigramLM(alphabet_size=alphabet_size, delta=delta, trigram=trigram, bigram=bigram)


def group_score(lm: TrigramLM, c1: int, c2: int, c3: int, rprob: float, gamma: float) -> float:
    """gamma * ln(Lscore) + (1 - gamma) * ln(Rprob)."""
    if rprob <= 0:
        raise ValueError(f"rprob must be positive, got {rprob}")
    return gamma * math.log(lm.prob(c1, c2, c3)) + (1.0 - gamma) * math.log(rprob)


@dataclass(frozen=True)
class DecodeConfig:
    gamma: float = 0.3
    step_offsets: tuple[int, ...] = (-2, -1, 0)  # allowed steps are w + offset
    start_slack: float | None = None  # defaults to w / 2
    end_slack: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")


@dataclass
class _State:
    score_sum: float
    node: int
    last_two: tuple[int, int]
    n_windows: int
    text: tuple[int, ...]

    @property
    def totalscore(self) -> float:
        return self.score_sum / self.n_windows


def dp_decode(
    lattice: list[LatticeNode],
    lm: TrigramLM,
    w: int,
    cfg: DecodeConfig | None = None,
) -> tuple[list[int], float]:
    """Best character sequence through the lattice and its total score.

    States are keyed by (window right edge, last two characters, number of
    windows); of colliding states only the higher cumulative score survives.
    Paths start at nodes within start_slack of the leftmost window and must
    end within end_slack of the rightmost to count; if no path reaches the
    right edge the best-scoring state overall is returned as a fallback.
    """
    if cfg is None:
        cfg = DecodeConfig()
    if not lattice:
        return [], NO_SCORE
    nodes = sorted(lattice, key=lambda n: (n.a, n.b))
    start_slack = cfg.start_slack if cfg.start_slack is not None else w / 2
    end_slack = cfg.end_slack if cfg.end_slack is not None else w / 2
    min_a = nodes[0].a
    max_b = max(n.b for n in nodes)
    steps = tuple(w + o for o in cfg.step_offsets)
    start = lm.start_token

    nodes_at_a: dict[int, list[int]] = {}
    for idx, node in enumerate(nodes):
        nodes_at_a.setdefault(node.a, []).append(idx)

    # states_at[i]: (last_two, n_windows) -> _State; global_best dedups
    # across nodes sharing a right edge.
    states_at: list[dict] = [dict() for _ in nodes]
    global_best: dict[tuple, _State] = {}

    def insert(state: _State) -> None:
        key = (nodes[state.node].b, state.last_two, state.n_windows)
        cur = global_best.get(key)
        if cur is not None and cur.score_sum >= state.score_sum:
            return
        if cur is not None:
            del states_at[cur.node][(cur.last_two, cur.n_windows)]
        global_best[key] = state
        states_at[state.node][(state.last_two, state.n_windows)] = state

    for idx, node in enumerate(nodes):
        if node.a > min_a + start_slack:
            break
        for cand in node.candidates:
            insert(
                _State(
                    score_sum=group_score(lm, start, start, cand.category, cand.rprob, cfg.gamma),
                    node=idx,
                    last_two=(start, cand.category),
                    n_windows=1,
                    text=(cand.category,),
                )
            )

    for idx, node in enumerate(nodes):
        if not states_at[idx]:
            continue
        succ = [j for step in steps for j in nodes_at_a.get(node.a + step, [])]
        if not succ:
            continue
        for state in list(states_at[idx].values()):
            c1, c2 = state.last_two
            for j in succ:
                for cand in nodes[j].candidates:
                    insert(
                        _State(
                            score_sum=state.score_sum
                            + group_score(lm, c1, c2, cand.category, cand.rprob, cfg.gamma),
                            node=j,
                            last_two=(c2, cand.category),
                            n_windows=state.n_windows + 1,
                            text=state.text + (cand.category,),
                        )
                    )

    def best_of(states) -> _State | None:
        winner = None
        for s in states:
            if winner is None or s.totalscore > winner.totalscore:
                winner = s
        return winner

    terminal = [
        s
        for idx, node in enumerate(nodes)
        if node.b >= max_b - end_slack
        for s in states_at[idx].values()
    ]
    best = best_of(terminal)
    if best is None:
        best = best_of(s for d in states_at for s in d.values())
    if best is None:
        return [], NO_SCORE
    return list(best.text), best.totalscore


# ---------------------------------------------------------------------------
# Language model file


def save_lm(lm: TrigramLM, path: str | Path) -> None:
    entries = sorted(lm.trigram.items())
    chunks = [
        struct.pack("<4sIIdI", LM_MAGIC, LM_VERSION, lm.alphabet_size, lm.delta, len(entries))
    ]
    for (c1, c2, c3), count in entries:
        chunks.append(struct.pack("<IIIQ", c1, c2, c3, count))
    Path(path).write_bytes(b"".join(chunks))


def load_lm(path: str | Path) -> TrigramLM:
    raw = Path(path).read_bytes()
    magic, version, alphabet_size, delta, n = struct.unpack_from("<4sIIdI", raw, 0)
    if magic != LM_MAGIC:
        raise ValueError(f"{path}: not a language model file (magic {magic!r})")
    if version != LM_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    offset = struct.calcsize("<4sIIdI")
    trigram: Counter = Counter()
    bigram: Counter = Counter()
    for _ in range(n):
        c1, c2, c3, count = struct.unpack_from("<IIIQ", raw, offset)
        offset += struct.calcsize("<IIIQ")
        trigram[(c1, c2, c3)] = count
        bigram[(c1, c2)] += count
    return TrigramLM(alphabet_size=alphabet_size, delta=delta, trigram=trigram, bigram=bigram)
