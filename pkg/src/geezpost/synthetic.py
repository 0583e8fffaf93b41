"""Seeded toy corpus of Ethiopic-script sentences.

Stands in for real text when exercising the pipeline end to end. Words are
random syllable strings built only from canonical (homophone-free)
syllables, so the corpus is already normalized. Word frequencies follow a
Zipf law and each word has a few favoured successors, which gives a bigram
model something to learn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import Chart, default_chart, render
from .normalizer import HomophoneTable, canonical_syllable, default_table


@dataclass(frozen=True)
class ToyCorpusConfig:
    sentences: int = 5000
    vocabulary: int = 3000
    zipf_exponent: float = 1.05
    min_words: int = 3
    max_words: int = 12
    successors: int = 4
    successor_prob: float = 0.5
    seed: int = 2024
    scheme: str = "unicode"


_WORD_LENGTHS = np.array([1, 2, 3, 4, 5])
_LENGTH_WEIGHTS = np.array([0.1, 0.35, 0.33, 0.16, 0.06])


def _zipf(n: int, s: float) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def make_lexicon(cfg: ToyCorpusConfig, rng, chart: Chart, table: HomophoneTable) -> list[tuple]:
    inventory = [s for s in chart.syllables if canonical_syllable(s, table, chart) == s]
    syl_p = _zipf(len(inventory), 0.8)
    order = rng.permutation(len(inventory))
    inventory = [inventory[i] for i in order]
    seen: set[tuple] = set()
    lexicon: list[tuple] = []
    while len(lexicon) < cfg.vocabulary:
        n = int(rng.choice(_WORD_LENGTHS, p=_LENGTH_WEIGHTS))
        word = tuple(inventory[i] for i in rng.choice(len(inventory), size=n, p=syl_p))
        if word not in seen:
            seen.add(word)
            lexicon.append(word)
    return lexicon


def toy_corpus(cfg: ToyCorpusConfig | None = None, chart: Chart | None = None) -> list[str]:
    """Return ``cfg.sentences`` lines; identical for identical configs."""
    cfg = cfg or ToyCorpusConfig()
    chart = chart or default_chart()
    table = default_table()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    lexicon = make_lexicon(cfg, rng, chart, table)
    spelled = [render(w, cfg.scheme, chart) for w in lexicon]
    p = _zipf(len(lexicon), cfg.zipf_exponent)
    follow = rng.choice(len(lexicon), size=(len(lexicon), cfg.successors), p=p)
    lines = []
    for _ in range(cfg.sentences):
        n = int(rng.integers(cfg.min_words, cfg.max_words + 1))
        ids = [int(rng.choice(len(lexicon), p=p))]
        while len(ids) < n:
            if rng.random() < cfg.successor_prob:
                ids.append(int(follow[ids[-1], rng.integers(cfg.successors)]))
            else:
                ids.append(int(rng.choice(len(lexicon), p=p)))
        lines.append(" ".join(spelled[i] for i in ids))
    return lines
