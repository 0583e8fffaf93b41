"""Syllable-level and pair-merge subword vocabularies.

Tokens are canonical ascii strings. A subword token is the concatenation
of the syllables it covers, so decoding is plain string concatenation and
round-trips any normalized line exactly. Merges never cross a space.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .codec import Chart, default_chart, detect_scheme, parse_surface, render, render_syllable, words
from .errors import TargetTooSmall

PAD, UNK, BOS, EOS, SPACE_TOKEN = "<pad>", "<unk>", "<s>", "</s>", "<space>"
SPECIALS = (PAD, UNK, BOS, EOS, SPACE_TOKEN)


@dataclass(frozen=True)
class MergeRule:
    left: str
    right: str
    rank: int


@dataclass
class Vocabulary:
    tokens: list[str]
    kind: str = "char_level"
    merges: list[MergeRule] = field(default_factory=list)

    def __post_init__(self):
        if tuple(self.tokens[: len(SPECIALS)]) != SPECIALS:
            raise ValueError("vocabulary must start with the special tokens")
        self.ids = {}
        for i, tok in enumerate(self.tokens):
            if tok in self.ids:
                raise ValueError(f"duplicate token {tok!r}")
            self.ids[tok] = i
        self._ranks = {(m.left, m.right): m.rank for m in self.merges}
        for want, m in enumerate(self.merges):
            if m.rank != want:
                raise ValueError("merge ranks must be dense from 0")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, tok):
        return tok in self.ids

    @property
    def space_id(self):
        return self.ids[SPACE_TOKEN]

    @property
    def unk_id(self):
        return self.ids[UNK]


def _syllable_words(line: str, chart: Chart) -> list[tuple[str, ...]]:
    seq = parse_surface(line, detect_scheme(line), chart)
    return [tuple(render_syllable(s, "ascii", chart) for s in w) for w in words(seq)]


def build_char_vocab(corpus: Iterable[str] = (), chart: Chart | None = None) -> Vocabulary:
    """Specials, then every chart syllable, then anything else observed.

    Chart closure means the vocabulary is the same for every normalized
    corpus; the corpus pass only matters for non-default charts.
    """
    chart = chart or default_chart()
    tokens = list(SPECIALS) + [render_syllable(s, "ascii", chart) for s in chart.syllables]
    seen = set(tokens)
    for line in corpus:
        for w in _syllable_words(line, chart):
            for tok in w:
                if tok not in seen:
                    seen.add(tok)
                    tokens.append(tok)
    return Vocabulary(tokens, "char_level")


def _pair_counts(word_freq: dict[tuple[str, ...], int]) -> Counter:
    pairs: Counter = Counter()
    for w, f in word_freq.items():
        for a, b in zip(w, w[1:]):
            pairs[(a, b)] += f
    return pairs


def _merge_word(w: tuple[str, ...], a: str, b: str) -> tuple[str, ...]:
    out, i = [], 0
    while i < len(w):
        if i + 1 < len(w) and w[i] == a and w[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(w[i])
            i += 1
    return tuple(out)


def train_subword(corpus: Iterable[str], target_size: int, chart: Chart | None = None) -> Vocabulary:
    """Greedy pair-merge training up to *target_size* tokens.

    Each step merges the most frequent adjacent pair (ties: smallest pair
    in string order). Training stops early when no pair occurs twice.
    Pairs whose concatenation is already a token are skipped, which keeps
    ``len(merges) == len(vocab) - base``.
    """
    chart = chart or default_chart()
    corpus = list(corpus)
    base = build_char_vocab(corpus, chart)
    if target_size < len(base):
        raise TargetTooSmall(f"target size {target_size} is below the base vocabulary size {len(base)}")
    word_freq: Counter = Counter()
    for line in corpus:
        word_freq.update(_syllable_words(line, chart))
    tokens = list(base.tokens)
    known = set(tokens)
    merges: list[MergeRule] = []
    words_ = dict(word_freq)
    pairs = _pair_counts(words_)
    while len(tokens) < target_size:
        best = None
        for pair, count in pairs.items():
            if count < 2 or pair[0] + pair[1] in known:
                continue
            if best is None or count > best[1] or (count == best[1] and pair < best[0]):
                best = (pair, count)
        if best is None:
            break
        (a, b), _ = best
        merges.append(MergeRule(a, b, len(merges)))
        tokens.append(a + b)
        known.add(a + b)
        updated: dict[tuple[str, ...], int] = {}
        for w, f in words_.items():
            if len(w) > 1 and a in w:
                nw = _merge_word(w, a, b)
                if nw != w:
                    for p in zip(w, w[1:]):
                        pairs[p] -= f
                    for p in zip(nw, nw[1:]):
                        pairs[p] += f
                    w = nw
            updated[w] = updated.get(w, 0) + f
        words_ = updated
        pairs = +pairs
    return Vocabulary(tokens, "subword", merges)


def apply_merges(pieces: Sequence[str], ranks: dict[tuple[str, str], int]) -> list[str]:
    """Repeatedly merge the lowest-ranked adjacent pair (leftmost on ties)."""
    pieces = list(pieces)
    while len(pieces) > 1:
        best_i, best_rank = -1, None
        for i in range(len(pieces) - 1):
            r = ranks.get((pieces[i], pieces[i + 1]))
            if r is not None and (best_rank is None or r < best_rank):
                best_i, best_rank = i, r
        if best_rank is None:
            break
        pieces[best_i : best_i + 2] = [pieces[best_i] + pieces[best_i + 1]]
    return pieces


def encode(text: str, vocab: Vocabulary, chart: Chart | None = None) -> list[int]:
    chart = chart or default_chart()
    ids: list[int] = []
    for w in _syllable_words(text, chart):
        if ids:
            ids.append(vocab.space_id)
        pieces = apply_merges(w, vocab._ranks) if vocab.merges else list(w)
        ids.extend(vocab.ids.get(p, vocab.unk_id) for p in pieces)
    return ids


def decode(ids: Iterable[int], vocab: Vocabulary, scheme: str = "ascii", chart: Chart | None = None) -> str:
    out = []
    for i in ids:
        tok = vocab.tokens[i]
        if tok == SPACE_TOKEN:
            out.append(" ")
        elif tok in SPECIALS:
            continue
        else:
            out.append(tok)
    text = "".join(out)
    if scheme != "ascii":
        text = render(parse_surface(text, "ascii", chart), scheme, chart)
    return text


def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tok in vocab.tokens:
            fh.write(tok + "\n")


def save_merges(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for m in vocab.merges:
            fh.write(f"{m.left} {m.right}\n")


def load_vocab(path, merges_path=None) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        tokens = [line.rstrip("\n") for line in fh]
    merges = []
    if merges_path is not None:
        with open(merges_path, encoding="utf-8") as fh:
            for rank, line in enumerate(fh):
                left, right = line.rstrip("\n").split(" ")
                merges.append(MergeRule(left, right, rank))
    return Vocabulary(tokens, "subword" if merges else "char_level", merges)

