"""Homophone merging and text cleanup.

Output is rendered canonically in the input's scheme (bare sixth order in
ascii), so ``normalize`` is idempotent and its output round-trips through
the tokenizer byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .codec import (
    SPACE,
    Chart,
    Syllable,
    default_chart,
    detect_scheme,
    parse_surface,
    render,
)
from .errors import GeezError, ScriptError


@dataclass(frozen=True)
class HomophoneTable:
    """Groups of interchangeable consonant rows, canonical member first."""

    groups: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        seen = set()
        for group in self.groups:
            if len(group) < 2:
                raise ValueError(f"homophone group {group!r} needs at least two members")
            for member in group:
                if member in seen:
                    raise ValueError(f"consonant {member!r} appears in more than one group")
                seen.add(member)

    def group_of(self, consonant: str):
        for group in self.groups:
            if consonant in group:
                return group
        return None

    def variants(self) -> set[str]:
        return {m for g in self.groups for m in g[1:]}


def parse_table(text: str, chart: Chart | None = None) -> HomophoneTable:
    chart = chart or default_chart()
    groups = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        members = tuple(line.split())
        for m in members:
            if m not in chart.by_ascii:
                raise ValueError(f"homophone table line {lineno}: unknown consonant {m!r}")
        groups.append(members)
    return HomophoneTable(tuple(groups))


def load_table(path=None, chart: Chart | None = None) -> HomophoneTable:
    if path is None:
        text = resources.files("geezpost.data").joinpath("homophones.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return parse_table(text, chart)


@lru_cache(maxsize=1)
def default_table() -> HomophoneTable:
    return load_table()


@dataclass(frozen=True)
class NormalizationConfig:
    table: HomophoneTable = field(default_factory=default_table)
    strip_nonscript: bool = True
    collapse_whitespace: bool = True
    strict: bool = False


def canonical_syllable(syl: Syllable, table: HomophoneTable, chart: Chart | None = None) -> Syllable:
    """Map *syl* onto the first group member whose row has the same form.

    Derived forms missing from the canonical row fall through to the next
    member, so the mapping is total and idempotent.
    """
    group = table.group_of(syl.consonant)
    if group is None:
        return syl
    chart = chart or default_chart()
    for member in group:
        cand = Syllable(member, syl.vowel, syl.derived)
        if cand in chart:
            return cand
    return syl


def merge_homophones(seq, table: HomophoneTable, chart: Chart | None = None):
    return [tok if tok is SPACE else canonical_syllable(tok, table, chart) for tok in seq]


def _clean_word(word: str, scheme: str, chart: Chart):
    """Return the parsed syllables of *word* with non-script characters dropped."""
    if scheme == "unicode":
        kept = "".join(ch for ch in word if chart.from_codepoint(ord(ch)) is not None)
        return parse_surface(kept, "unicode", chart) if kept else []
    kept = "".join(ch for ch in word if ch in chart.unit_chars)
    for candidate in (kept, kept.rstrip(".")):
        if not candidate:
            continue
        try:
            return parse_surface(candidate, "ascii", chart)
        except ScriptError:
            continue
    return []


def _split_unicode_punct(text: str) -> str:
    # Ethiopic word separators and full stops act as spaces
    return "".join(" " if 0x1360 <= ord(ch) <= 0x1368 else ch for ch in text)


def normalize(text: str, cfg: NormalizationConfig | None = None, scheme: str | None = None,
              chart: Chart | None = None) -> str:
    cfg = cfg or NormalizationConfig()
    chart = chart or default_chart()
    scheme = scheme or detect_scheme(text)
    if cfg.strip_nonscript:
        if scheme == "unicode":
            text = _split_unicode_punct(text)
        words = [w for w in (_clean_word(w, scheme, chart) for w in text.split()) if w]
        seq = []
        for w in words:
            if seq:
                seq.append(SPACE)
            seq.extend(w)
        return render(merge_homophones(seq, cfg.table, chart), scheme, chart)

    if cfg.collapse_whitespace:
        return _normalize_spans(" ".join(text.split()), cfg, scheme, chart)
    return _normalize_spans(text, cfg, scheme, chart)


def _normalize_spans(text, cfg, scheme, chart):
    # whitespace is copied verbatim so word boundaries never move
    out, buf = [], []

    def flush():
        if buf:
            out.append(_normalize_chunk("".join(buf), cfg, scheme, chart))
            buf.clear()

    for ch in text:
        if ch.isspace():
            flush()
            out.append(ch)
        else:
            buf.append(ch)
    flush()
    return "".join(out)


def _normalize_chunk(chunk, cfg, scheme, chart):
    try:
        seq = parse_surface(chunk, scheme, chart)
    except ScriptError:
        if cfg.strict:
            raise
        return chunk
    return render(merge_homophones(seq, cfg.table, chart), scheme, chart)


def reduced_phoneme_alphabet(table: HomophoneTable, chart: Chart | None = None) -> set[str]:
    """Consonant symbols left once every variant is folded into its group."""
    chart = chart or default_chart()
    return {c.ascii for c in chart.consonants} - table.variants()


def try_normalize(text: str, cfg: NormalizationConfig | None = None) -> str | None:
    try:
        return normalize(text, cfg)
    except GeezError:
        return None

