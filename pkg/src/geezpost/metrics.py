"""Character and word error rates from minimum edit distance alignment."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Hashable, Iterable, Sequence

from .codec import detect_scheme, parse_surface, render
from .errors import EmptyReference, IdMismatch, ScriptError
from .normalizer import NormalizationConfig, normalize


@dataclass(frozen=True)
class AlignmentReport:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    ref_len: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def rate(self) -> float:
        if self.ref_len == 0:
            raise EmptyReference("reference has no tokens")
        return self.errors / self.ref_len

    def __add__(self, other: "AlignmentReport") -> "AlignmentReport":
        return AlignmentReport(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.ref_len + other.ref_len,
        )


def edit_align(ref: Sequence[Hashable], hyp: Sequence[Hashable]) -> AlignmentReport:
    """Levenshtein alignment counts.

    Among minimum-cost scripts the one with the most substitutions wins,
    so a mismatch is never reported as a deletion plus an insertion.
    """
    n, m = len(ref), len(hyp)
    # cells hold (cost, -subs, deletions, insertions); tuple order is the tie-break
    prev = [(j, 0, 0, j) for j in range(m + 1)]
    for i in range(1, n + 1):
        r = ref[i - 1]
        cur = [(i, 0, i, 0)]
        for j in range(1, m + 1):
            c, ns, d, ins = prev[j - 1]
            if r == hyp[j - 1]:
                best = (c, ns, d, ins)
            else:
                best = (c + 1, ns - 1, d, ins)
            c, ns, d, ins = prev[j]
            cand = (c + 1, ns, d + 1, ins)
            if cand[:2] < best[:2]:
                best = cand
            c, ns, d, ins = cur[j - 1]
            cand = (c + 1, ns, d, ins + 1)
            if cand[:2] < best[:2]:
                best = cand
            cur.append(best)
        prev = cur
    _, ns, d, ins = prev[m]
    return AlignmentReport(-ns, d, ins, n)


def edit_distance(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    return edit_align(a, b).errors


def _scheme_for(*texts):
    return "unicode" if any(detect_scheme(t) == "unicode" for t in texts) else "ascii"


def char_tokens(text: str, scheme: str | None = None) -> list:
    """Syllables plus one token per word gap."""
    return parse_surface(text, scheme or detect_scheme(text))


def word_tokens(text: str, scheme: str | None = None) -> list:
    """Whitespace words, keyed by syllables when the word parses.

    Keying by syllables makes ``salAme`` and ``salAm`` the same word.
    """
    scheme = scheme or detect_scheme(text)
    out = []
    for w in text.split():
        try:
            seq = parse_surface(w, scheme)
        except ScriptError:
            out.append(w)
        else:
            out.append(tuple(seq))
    return out


def cer_report(ref: str, hyp: str) -> AlignmentReport:
    scheme = _scheme_for(ref, hyp)
    rep = edit_align(char_tokens(ref, scheme), char_tokens(hyp, scheme))
    if rep.ref_len == 0:
        raise EmptyReference("reference has no syllables")
    return rep


def wer_report(ref: str, hyp: str) -> AlignmentReport:
    scheme = _scheme_for(ref, hyp)
    rep = edit_align(word_tokens(ref, scheme), word_tokens(hyp, scheme))
    if rep.ref_len == 0:
        raise EmptyReference("reference has no words")
    return rep


def cer(ref: str, hyp: str) -> float:
    return cer_report(ref, hyp).rate


def wer(ref: str, hyp: str) -> float:
    return wer_report(ref, hyp).rate


@dataclass(frozen=True)
class SentenceScore:
    id: str
    cer: AlignmentReport
    wer: AlignmentReport


@dataclass
class CorpusScore:
    per_sentence: list[SentenceScore] = field(default_factory=list)
    normalized: bool = False

    @property
    def cer_totals(self) -> AlignmentReport:
        return sum((s.cer for s in self.per_sentence), AlignmentReport())

    @property
    def wer_totals(self) -> AlignmentReport:
        return sum((s.wer for s in self.per_sentence), AlignmentReport())

    @property
    def micro_cer(self) -> float:
        return self.cer_totals.rate

    @property
    def micro_wer(self) -> float:
        return self.wer_totals.rate

    def to_dict(self) -> dict:
        def counts(rep):
            d = asdict(rep)
            d["errors"] = rep.errors
            return d

        return {
            "mode": {"normalize_before_scoring": self.normalized},
            "totals": {
                "sentences": len(self.per_sentence),
                "cer": counts(self.cer_totals),
                "wer": counts(self.wer_totals),
            },
            "rates": {"cer": self.micro_cer, "wer": self.micro_wer},
            "sentences": [
                {
                    "id": s.id,
                    "cer": s.cer.rate,
                    "wer": s.wer.rate,
                    "cer_counts": counts(s.cer),
                    "wer_counts": counts(s.wer),
                }
                for s in self.per_sentence
            ],
        }


def _score_one(args):
    sid, ref, hyp, norm_cfg = args
    if norm_cfg is not None:
        ref, hyp = normalize(ref, norm_cfg), normalize(hyp, norm_cfg)
    return SentenceScore(sid, cer_report(ref, hyp), wer_report(ref, hyp))


def score_corpus(
    refs: Iterable[tuple[str, str]],
    hyps: Iterable[tuple[str, str]],
    normalize_cfg: NormalizationConfig | None = None,
    jobs: int = 1,
) -> CorpusScore:
    """Micro-averaged CER/WER over id-matched (id, text) records.

    Sentences are reported in reference order; *hyps* may be in any order
    but must cover exactly the same ids.
    """
    refs = list(refs)
    hyp_map = {}
    for sid, text in hyps:
        if sid in hyp_map:
            raise IdMismatch(f"duplicate hypothesis id {sid!r}")
        hyp_map[sid] = text
    ref_ids = [sid for sid, _ in refs]
    if len(set(ref_ids)) != len(ref_ids):
        raise IdMismatch("duplicate reference id")
    missing = [sid for sid in ref_ids if sid not in hyp_map]
    extra = sorted(set(hyp_map) - set(ref_ids))
    if missing or extra:
        raise IdMismatch(f"ids differ: missing hypotheses {missing[:5]}, unmatched hypotheses {extra[:5]}")
    tasks = [(sid, text, hyp_map[sid], normalize_cfg) for sid, text in refs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per = list(pool.map(_score_one, tasks, chunksize=64))
    else:
        per = [_score_one(t) for t in tasks]
    return CorpusScore(per, normalized=normalize_cfg is not None)


def format_table(score: CorpusScore, title: str = "") -> str:
    c, w = score.cer_totals, score.wer_totals
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'metric':<6} {'rate':>8} {'S':>7} {'D':>7} {'I':>7} {'N':>8}")
    for name, rep in (("CER", c), ("WER", w)):
        lines.append(
            f"{name:<6} {rep.rate * 100:7.2f}% {rep.substitutions:>7} {rep.deletions:>7} "
            f"{rep.insertions:>7} {rep.ref_len:>8}"
        )
    lines.append(f"sentences: {len(score.per_sentence)}  normalized: {'yes' if score.normalized else 'no'}")
    return "\n".join(lines)


def canonical_text(text: str) -> str:
    """Canonical ascii rendering, or the text unchanged if it does not parse."""
    try:
        return render(parse_surface(text, detect_scheme(text)), "ascii")
    except ScriptError:
        return text

