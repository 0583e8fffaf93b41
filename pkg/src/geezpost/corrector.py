"""Resegmentation and bounded syllable repair of ASR output.

The input is flattened to a syllable stream and re-split into words by a
Viterbi search over a lattice whose edges are

* lexicon words matching a span within ``edit_budget`` syllable edits, and
* out-of-vocabulary runs of any length.

Each path is scored by an add-k smoothed unigram or bigram model over
words, an OOV penalty per syllable, a channel penalty per edit and, in
``soft`` space mode, a bonus for every input space kept as a boundary.
"""

from __future__ import annotations

import logging
import math
import shlex
import subprocess
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

from .codec import SPACE, Syllable, detect_scheme, parse_surface, render, tokenize, words
from .errors import ConfigError, EmptyCorpus, GeezError, ScriptError
from .normalizer import NormalizationConfig, normalize

log = logging.getLogger(__name__)

BOS = "<s>"
OOV = "<unk>"
SPACE_MODES = ("ignore", "soft", "hard")


@dataclass
class Lexicon:
    """Known words keyed by canonical ascii, with their preferred spelling."""

    surfaces: dict[str, str] = field(default_factory=dict)
    syllables: dict[str, tuple[Syllable, ...]] = field(default_factory=dict)

    @property
    def words(self) -> set[str]:
        return set(self.surfaces.values())

    @property
    def max_word_syllables(self) -> int:
        return max((len(s) for s in self.syllables.values()), default=0)

    def __len__(self):
        return len(self.surfaces)

    def __contains__(self, key):
        return key in self.surfaces

    @classmethod
    def from_words(cls, ws: Iterable[str]) -> "Lexicon":
        lex = cls()
        for w in ws:
            seq = tuple(parse_surface(w, detect_scheme(w)))
            if not seq or SPACE in seq:
                raise ValueError(f"lexicon word {w!r} must be a single non-empty word")
            key = render(seq, "ascii")
            lex.surfaces.setdefault(key, w)
            lex.syllables[key] = seq
        return lex


@dataclass
class NGramModel:
    order: int = 2
    smoothing_k: float = 0.1
    oov_syllable_logprob: float = -6.0
    unigrams: Counter = field(default_factory=Counter)
    bigrams: dict[str, Counter] = field(default_factory=dict)

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ConfigError("n-gram order must be 1 or 2")
        if self.smoothing_k <= 0:
            raise ConfigError("smoothing_k must be positive")
        self.refresh()

    def refresh(self):
        """Recompute cached totals after the count tables change."""
        k = self.smoothing_k
        self.vocab_size = len(self.unigrams)
        self.total = sum(self.unigrams.values())
        self.context_totals = {ctx: sum(c.values()) for ctx, c in self.bigrams.items() if c}
        self._uni_denom = math.log(self.total + k * (self.vocab_size + 1))
        self._ctx_denom = {
            ctx: math.log(t + k * (self.vocab_size + 1)) for ctx, t in self.context_totals.items()
        }
        self._log_k = math.log(k)
        self.predecessors: dict[str, set[str]] = defaultdict(set)
        if self.order == 2:
            for ctx, counts in self.bigrams.items():
                for w in counts:
                    self.predecessors[w].add(ctx)

    def has_context(self, prev: str) -> bool:
        return self.order == 2 and prev in self._ctx_denom

    def unseen_logprob(self, prev: str) -> float:
        """log P(w | prev) for any w never seen after *prev*, OOV included."""
        return self._log_k - self._ctx_denom[prev]

    def context(self, word: str | None) -> str:
        if self.order == 1:
            return ""
        return OOV if word is None else word

    def logprob(self, word: str | None, prev: str = BOS) -> float:
        """log P(word | prev); ``word=None`` is the OOV class.

        Unseen contexts fall back to the unigram distribution, so every
        context sums to one over vocabulary plus OOV.
        """
        if self.order == 2 and prev in self._ctx_denom:
            c = self.bigrams[prev].get(word, 0) if word is not None else 0
            if not c:
                return self._log_k - self._ctx_denom[prev]
            return math.log(c + self.smoothing_k) - self._ctx_denom[prev]
        c = self.unigrams.get(word, 0) if word is not None else 0
        if not c:
            return self._log_k - self._uni_denom
        return math.log(c + self.smoothing_k) - self._uni_denom

    def oov_logprob(self, n_syllables: int, prev: str = BOS) -> float:
        return self.logprob(None, prev) + self.oov_syllable_logprob * n_syllables


def _line_words(line: str):
    seq = parse_surface(line, detect_scheme(line))
    surfaces = line.split()
    return list(zip(words(seq), surfaces))


def train_lm(
    corpus: Iterable[str],
    order: int = 2,
    smoothing_k: float = 0.1,
    oov_syllable_logprob: float = -6.0,
) -> tuple[Lexicon, NGramModel]:
    """Count words and word bigrams; lines that fail to parse are skipped."""
    uni: Counter = Counter()
    bi: dict[str, Counter] = defaultdict(Counter)
    spellings: dict[str, Counter] = defaultdict(Counter)
    sylls: dict[str, tuple] = {}
    for lineno, line in enumerate(corpus, 1):
        if not line.strip():
            continue
        try:
            pairs = _line_words(line)
        except ScriptError as exc:
            log.warning("train_lm: line %d skipped: %s", lineno, exc)
            continue
        prev = BOS
        for syl, surface in pairs:
            key = render(syl, "ascii")
            uni[key] += 1
            spellings[key][surface] += 1
            sylls[key] = syl
            bi[prev][key] += 1
            prev = key
    if not uni:
        raise EmptyCorpus("no words in training corpus")
    lex = Lexicon()
    for key in sorted(uni):
        # most frequent spelling, ties broken by string order
        lex.surfaces[key] = min(spellings[key].items(), key=lambda kv: (-kv[1], kv[0]))[0]
        lex.syllables[key] = sylls[key]
    lm = NGramModel(order, smoothing_k, oov_syllable_logprob, uni, dict(bi))
    return lex, lm


# -- model file ----------------------------------------------------------------

MODEL_HEADER = "#geezpost-lm v1"


def save_model(lex: Lexicon, lm: NGramModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(MODEL_HEADER + "\n")
        fh.write(f"order\t{lm.order}\n")
        fh.write(f"smoothing_k\t{lm.smoothing_k!r}\n")
        fh.write(f"oov_syllable_logprob\t{lm.oov_syllable_logprob!r}\n")
        fh.write("[lexicon]\n")
        for key in sorted(lex.surfaces):
            fh.write(f"{key}\t{lex.surfaces[key]}\t{lm.unigrams.get(key, 0)}\n")
        fh.write("[bigrams]\n")
        for prev in sorted(lm.bigrams):
            for word, c in sorted(lm.bigrams[prev].items()):
                fh.write(f"{prev}\t{word}\t{c}\n")


def load_model(path) -> tuple[Lexicon, NGramModel]:
    params: dict = {}
    lex = Lexicon()
    uni: Counter = Counter()
    bi: dict[str, Counter] = defaultdict(Counter)
    section = None
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != MODEL_HEADER:
            raise ConfigError(f"{path}: not a geezpost model file")
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            if line in ("[lexicon]", "[bigrams]"):
                section = line
                continue
            parts = line.split("\t")
            if section is None and len(parts) == 2:
                params[parts[0]] = parts[1]
            elif section == "[lexicon]" and len(parts) == 3:
                key, surface, count = parts
                lex.surfaces[key] = surface
                lex.syllables[key] = tuple(parse_surface(key, "ascii"))
                if int(count):
                    uni[key] = int(count)
            elif section == "[bigrams]" and len(parts) == 3:
                bi[parts[0]][parts[1]] = int(parts[2])
            else:
                raise ConfigError(f"{path}:{lineno}: unexpected line")
    lm = NGramModel(
        int(params.get("order", 2)),
        float(params.get("smoothing_k", 0.1)),
        float(params.get("oov_syllable_logprob", -6.0)),
        uni,
        dict(bi),
    )
    return lex, lm


# -- search --------------------------------------------------------------------


@dataclass(frozen=True)
class CorrectionConfig:
    edit_budget: int = 1
    trust_input_spaces: str = "soft"
    beam_width: int = 256
    space_bonus: float = 1.0
    substitution_penalty: float = 4.0
    missing_syllable_penalty: float = 3.0
    extra_syllable_penalty: float = 8.0
    max_oov_syllables: int | None = None
    enabled: bool = True

    def __post_init__(self):
        if self.edit_budget < 0:
            raise ConfigError("edit_budget must be >= 0")
        if self.beam_width < 1:
            raise ConfigError("beam_width must be >= 1")
        if self.trust_input_spaces not in SPACE_MODES:
            raise ConfigError(f"trust_input_spaces must be one of {SPACE_MODES}")
        if min(self.substitution_penalty, self.missing_syllable_penalty, self.extra_syllable_penalty) < 0:
            raise ConfigError("edit penalties must be non-negative")

    @property
    def edit_costs(self) -> tuple[float, float, float]:
        return (self.substitution_penalty, self.missing_syllable_penalty, self.extra_syllable_penalty)

    @classmethod
    def from_dict(cls, data: dict) -> "CorrectionConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown corrector config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def edit_cost(word: Sequence, span: Sequence, costs: tuple[float, float, float]) -> tuple[int, float]:
    """Fewest edits turning *word* into *span*, then the cheapest such script.

    *costs* are (substitution, word syllable missing from the span, extra
    span syllable).
    """
    sub, miss, extra = costs
    prev = [(j, j * extra) for j in range(len(span) + 1)]
    for i in range(1, len(word) + 1):
        w = word[i - 1]
        cur = [(i, i * miss)]
        for j in range(1, len(span) + 1):
            n, c = prev[j - 1]
            best = (n, c) if w == span[j - 1] else (n + 1, c + sub)
            n, c = prev[j]
            best = min(best, (n + 1, c + miss))
            n, c = cur[j - 1]
            best = min(best, (n + 1, c + extra))
            cur.append(best)
        prev = cur
    return prev[-1]


def _deletions(seq: tuple, depth: int) -> set[tuple]:
    out = {seq}
    frontier = {seq}
    for _ in range(depth):
        nxt = set()
        for s in frontier:
            for i in range(len(s)):
                nxt.add(s[:i] + s[i + 1 :])
        out |= nxt
        frontier = nxt
    return out


class CandidateIndex:
    """Finds lexicon words within a syllable edit distance of a span.

    Deletion-neighbourhood lookup: two sequences within distance d share a
    key obtained by deleting at most d items from each. Hits are verified
    with an exact edit distance.
    """

    def __init__(self, lex: Lexicon, budget: int, costs=(1.0, 1.0, 1.0)):
        self.budget = budget
        self.costs = costs
        self.lex = lex
        self.max_len = lex.max_word_syllables + budget
        self.index: dict[tuple, list[str]] = defaultdict(list)
        for key in sorted(lex.syllables):
            for variant in _deletions(lex.syllables[key], budget):
                self.index[variant].append(key)

    def lookup(self, span: tuple) -> list[tuple[str, int, float]]:
        """Sorted ``(word, edits, cost)`` for every word within budget."""
        found: dict[str, tuple[int, float]] = {}
        for variant in _deletions(span, self.budget):
            for key in self.index.get(variant, ()):
                if key in found:
                    continue
                target = self.lex.syllables[key]
                d = (0, 0.0) if target == span else edit_cost(target, span, self.costs)
                if d[0] <= self.budget:
                    found[key] = d
        return [(k, *v) for k, v in sorted(found.items())]


@dataclass
class Edge:
    start: int
    end: int
    word: str | None  # None marks an OOV run
    edits: int = 0
    penalty: float = 0.0


@dataclass
class SegmentResult:
    text: str
    score: float
    path: list[Edge]


class Segmenter:
    """Reusable search state for one lexicon, model and config."""

    def __init__(self, lex: Lexicon, lm: NGramModel, cfg: CorrectionConfig | None = None):
        self.lex = lex
        self.lm = lm
        self.cfg = cfg or CorrectionConfig()
        self.index = CandidateIndex(lex, self.cfg.edit_budget, self.cfg.edit_costs)

    # lattice construction is shared with the exhaustive oracle in the tests
    def lattice(self, syls: Sequence[Syllable], spaces: set[int]) -> dict[int, list[Edge]]:
        """Edges grouped by end position, sorted by (start, word)."""
        n = len(syls)
        hard = self.cfg.trust_input_spaces == "hard"
        max_oov = self.cfg.max_oov_syllables or n
        by_end: dict[int, list[Edge]] = defaultdict(list)
        span_cache: dict[tuple, list] = {}
        for i in range(n):
            limit = n
            if hard:
                nxt = [p for p in spaces if p > i]
                limit = min(nxt) if nxt else n
            for j in range(i + 1, limit + 1):
                if j - i <= max_oov:
                    by_end[j].append(Edge(i, j, None))
                if j - i <= self.index.max_len:
                    span = tuple(syls[i:j])
                    hits = span_cache.get(span)
                    if hits is None:
                        hits = span_cache[span] = self.index.lookup(span)
                    for key, d, cost in hits:
                        by_end[j].append(Edge(i, j, key, d, cost))
        for j in by_end:
            by_end[j].sort(key=lambda e: (e.start, e.word is None, e.word or ""))
        return by_end

    def edge_extra(self, edge: Edge, spaces: set[int], n: int) -> float:
        """Everything in an edge's score except the LM term."""
        if edge.word is None:
            extra = self.lm.oov_syllable_logprob * (edge.end - edge.start)
        else:
            extra = -edge.penalty
        if self.cfg.trust_input_spaces == "soft" and edge.end < n and edge.end in spaces:
            extra += self.cfg.space_bonus
        return extra

    def _summarize(self, states: dict):
        """Best predecessor for words the context never saw.

        For a context with bigram counts, an unseen word scores
        ``log k - log denom(prev)`` whatever the word is, so the maximum over
        such contexts is computed once per position. Contexts without counts
        back off to the unigram model and only need the best path score.
        """
        lm = self.lm
        generic = fallback = None
        for prev in sorted(states):
            sc = states[prev][0]
            if lm.has_context(prev):
                val = sc + lm.unseen_logprob(prev)
                if generic is None or val > generic[0]:
                    generic = (val, prev)
            elif fallback is None or sc > fallback[0]:
                fallback = (sc, prev)
        return generic, fallback

    def _best_entry(self, word: str | None, states: dict, summary) -> tuple[float, str]:
        lm = self.lm
        generic, fallback = summary
        best = generic
        if fallback is not None:
            cand = (fallback[0] + lm.logprob(word, fallback[1]), fallback[1])
            best = _better(best, cand)
        if word is not None:
            preds = lm.predecessors.get(word, ())
            pool = preds if len(preds) < len(states) else states
            for prev in pool:
                if prev in states and prev in preds:
                    best = _better(best, (states[prev][0] + lm.logprob(word, prev), prev))
        return best

    def search(self, syls: Sequence[Syllable], spaces: set[int]) -> tuple[float, list[Edge]]:
        n = len(syls)
        if n == 0:
            return 0.0, []
        lattice = self.lattice(syls, spaces)
        ctx = self.lm.context
        # states[pos]: context -> (score, edge, previous context)
        states: list[dict] = [dict() for _ in range(n + 1)]
        states[0][BOS if self.lm.order == 2 else ""] = (0.0, None, None)
        summaries: list = [None] * (n + 1)
        for j in range(1, n + 1):
            cur: dict = {}
            for edge in lattice.get(j, ()):
                i = edge.start
                if not states[i]:
                    continue
                if summaries[i] is None:
                    summaries[i] = self._summarize(states[i])
                entry, prev = self._best_entry(edge.word, states[i], summaries[i])
                val = entry + self.edge_extra(edge, spaces, n)
                new_ctx = ctx(edge.word)
                old = cur.get(new_ctx)
                # edges arrive sorted by (start, word): first one wins a tie
                if old is None or val > old[0]:
                    cur[new_ctx] = (val, edge, prev)
            if len(cur) > self.cfg.beam_width:
                keep = sorted(cur.items(), key=lambda kv: (-kv[1][0], kv[0]))[: self.cfg.beam_width]
                cur = dict(keep)
            states[j] = cur
        final = min(states[n].items(), key=lambda kv: (-kv[1][0], kv[0]))
        best_score = final[1][0]
        path: list[Edge] = []
        pos, c = n, final[0]
        while pos > 0:
            _, edge, prev = states[pos][c]
            path.append(edge)
            pos, c = edge.start, prev
        path.reverse()
        return best_score, path

    def segment(self, text: str) -> SegmentResult:
        scheme = detect_scheme(text)
        units = tokenize(text, scheme)
        syls, surfaces, spaces = [], [], set()
        for u in units:
            if u.token is SPACE:
                spaces.add(len(syls))
            else:
                syls.append(u.token)
                surfaces.append(u.surface)
        if self.cfg.trust_input_spaces == "ignore":
            spaces = set()
        score, path = self.search(syls, spaces)
        out = []
        for e in path:
            if e.word is None:
                out.append("".join(surfaces[e.start : e.end]))
            else:
                out.append(self._spell(e.word, scheme))
        return SegmentResult(" ".join(out), score, path)

    def _spell(self, key: str, scheme: str) -> str:
        surface = self.lex.surfaces[key]
        if detect_scheme(surface) == scheme:
            return surface
        return render(self.lex.syllables[key], scheme)


def _better(a, b):
    """Higher score wins; equal scores go to the smaller context."""
    if a is None or b[0] > a[0] or (b[0] == a[0] and b[1] < a[1]):
        return b
    return a


def segment(text: str, lex: Lexicon, lm: NGramModel, cfg: CorrectionConfig | None = None) -> str:
    return Segmenter(lex, lm, cfg).segment(text).text


# -- pipeline ------------------------------------------------------------------


class ExternalCorrector:
    """Line-in/line-out wrapper around an external correction command.

    The command receives one hypothesis per line on stdin and must print
    exactly one corrected line per input line.
    """

    def __init__(self, command: str | Sequence[str]):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)

    def __call__(self, texts: Sequence[str]) -> list[str]:
        proc = subprocess.run(
            self.argv,
            input="".join(t.replace("\n", " ") + "\n" for t in texts),
            capture_output=True,
            text=True,
            encoding="utf-8",
            check=True,
        )
        out = proc.stdout.splitlines()
        if len(out) != len(texts):
            raise GeezError(f"external corrector returned {len(out)} lines for {len(texts)} inputs")
        return out


def _correct_chunk(args):
    items, lex, lm, cfg, norm_cfg = args
    seg = Segmenter(lex, lm, cfg)
    out = []
    for sid, text in items:
        try:
            cleaned = normalize(text, norm_cfg) if norm_cfg is not None else text
            out.append((sid, seg.segment(cleaned).text, None))
        except GeezError as exc:
            out.append((sid, text, str(exc)))
    return out


def correct_pipeline(
    hyps: Sequence[tuple[str, str]],
    lex: Lexicon | None,
    lm: NGramModel | None,
    cfg: CorrectionConfig | None = None,
    norm_cfg: NormalizationConfig | None = NormalizationConfig(),
    external: ExternalCorrector | None = None,
    jobs: int = 1,
    stats: dict | None = None,
) -> list[tuple[str, str]]:
    """Normalize then resegment every hypothesis, keeping ids and order.

    Lines that fail are passed through unchanged and counted in
    ``stats["failed"]``.
    """
    cfg = cfg or CorrectionConfig()
    if stats is None:
        stats = {}
    stats.setdefault("failed", 0)
    hyps = list(hyps)
    if not cfg.enabled:
        return hyps
    if external is not None:
        fixed = external([t for _, t in hyps])
        return [(sid, t) for (sid, _), t in zip(hyps, fixed)]
    if lex is None or lm is None:
        raise ConfigError("correction needs a model unless an external corrector is given")
    if jobs > 1 and len(hyps) > 1:
        from concurrent.futures import ProcessPoolExecutor

        size = max(1, math.ceil(len(hyps) / (jobs * 4)))
        chunks = [hyps[i : i + size] for i in range(0, len(hyps), size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_correct_chunk, [(c, lex, lm, cfg, norm_cfg) for c in chunks]))
        results = [r for part in parts for r in part]
    else:
        results = _correct_chunk((hyps, lex, lm, cfg, norm_cfg))
    out = []
    for sid, text, err in results:
        if err is not None:
            stats["failed"] += 1
            log.warning("hypothesis %s left unchanged: %s", sid, err)
        out.append((sid, text))
    return out


def exhaustive_best(seg: Segmenter, syls: Sequence[Syllable], spaces: set[int]) -> float:
    """Brute-force optimum over every segmentation and word choice.

    Exponential; meant for short inputs when checking :meth:`Segmenter.search`.
    """
    n = len(syls)
    if n == 0:
        return 0.0
    hard = seg.cfg.trust_input_spaces == "hard"
    max_oov = seg.cfg.max_oov_syllables or n
    span_options: dict[tuple[int, int], list] = {}
    logprob = lru_cache(maxsize=None)(seg.lm.logprob)

    def options_for(a, b):
        if (a, b) not in span_options:
            span = tuple(syls[a:b])
            opts = [Edge(a, b, None)] if b - a <= max_oov else []
            for key, target in seg.lex.syllables.items():
                d, cost = edit_cost(target, span, seg.cfg.edit_costs)
                if d <= seg.cfg.edit_budget:
                    opts.append(Edge(a, b, key, d, cost))
            span_options[a, b] = [(e, seg.lm.context(e.word), seg.edge_extra(e, spaces, n)) for e in opts]
        return span_options[a, b]

    best = -math.inf
    for k in range(n):
        for cuts in combinations(range(1, n), k):
            if hard and not spaces.issubset(cuts):
                continue
            bounds = (0, *cuts, n)
            options = [options_for(a, b) for a, b in zip(bounds, bounds[1:])]
            if all(options):
                best = max(best, _best_assignment(seg, options, logprob))
    return best


def _best_assignment(seg, options, logprob):
    # enumerate word choices segment by segment, tracking the context
    frontier = {BOS if seg.lm.order == 2 else "": 0.0}
    for opts in options:
        nxt: dict = {}
        for prev, sc in frontier.items():
            for e, ctx, extra in opts:
                val = sc + logprob(e.word, prev or BOS) + extra
                if ctx not in nxt or val > nxt[ctx]:
                    nxt[ctx] = val
        frontier = nxt
    return max(frontier.values())
