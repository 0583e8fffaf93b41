"""Ethiopic syllable codec.

Text is parsed into a sequence of :class:`Syllable` and :data:`SPACE`
tokens and rendered back in one of three surface schemes:

``unicode``
    Ethiopic codepoints, one grapheme per syllable.
``ascii``
    ethiop/SERA-style transliteration (``hagarA^cen``). A consonant with no
    vowel letter is sixth order, so ``salAm`` and ``salAme`` parse to the
    same syllables; rendering always uses the bare form.
``phoneme``
    consonant symbol followed by one or two vowel symbols (``l'ua``),
    words separated by spaces.

The chart itself lives in ``data/chart.tsv``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Iterator, NamedTuple, Sequence, Union

from .errors import (
    AmbiguousTransliteration,
    DanglingConsonant,
    DanglingVowel,
    UnknownGrapheme,
    UnrepresentableSyllable,
)

SCHEMES = ("unicode", "ascii", "phoneme")

ETHIOPIC_BLOCK = (0x1200, 0x137F)


@dataclass(frozen=True)
class VowelOrder:
    order: int
    ascii: str
    sound: str
    phoneme: str


VOWELS = (
    VowelOrder(1, "a", "ə", "'ua"),
    VowelOrder(2, "u", "u", "'u"),
    VowelOrder(3, "i", "i", "'i"),
    VowelOrder(4, "A", "a", "'A"),
    VowelOrder(5, "E", "e", "'E"),
    VowelOrder(6, "e", "ɨ", "'e"),
    VowelOrder(7, "o", "o", "'o"),
)
VOWEL_BY_ASCII = {v.ascii: v.order for v in VOWELS}
VOWEL_BY_PHONEME = {v.phoneme: v.order for v in VOWELS}
# longest first so "'ua" wins over "'u"
_PHONEME_VOWELS = sorted(VOWEL_BY_PHONEME, key=len, reverse=True)

WORD_BOUNDARY = "|"


@dataclass(frozen=True)
class Syllable:
    """Consonant row, vowel order and, for labialised forms, a second vowel.

    Derived syllables always carry ``vowel == 2`` (the ``u`` glide).
    """

    consonant: str
    vowel: int
    derived: int | None = None

    def key(self):
        return (self.consonant, self.vowel, self.derived or 0)


class _Space:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "SPACE"

    def __reduce__(self):
        return (_Space, ())


SPACE = _Space()

Token = Union[Syllable, _Space]


class Unit(NamedTuple):
    """A parsed token together with the exact text it came from."""

    token: Token
    surface: str


@dataclass(frozen=True)
class Consonant:
    ascii: str
    base: int
    name: str
    derived: dict = field(default_factory=dict)  # derived vowel order -> codepoint offset


class Chart:
    """Immutable lookup tables built from a chart file."""

    def __init__(self, consonants: Sequence[Consonant]):
        self.consonants = tuple(consonants)
        self.by_ascii = {c.ascii: c for c in self.consonants}
        if len(self.by_ascii) != len(self.consonants):
            raise ValueError("duplicate consonant transliteration in chart")
        self._cp_to_syl = {}
        self._syl_to_cp = {}
        self.syllables = []
        for c in self.consonants:
            for order in range(1, 8):
                self._add(Syllable(c.ascii, order), c.base + order - 1)
            for v2, off in sorted(c.derived.items(), key=lambda kv: kv[1]):
                self._add(Syllable(c.ascii, 2, v2), c.base + off)
        self.basic_count = sum(1 for s in self.syllables if s.derived is None)
        self.derived_count = len(self.syllables) - self.basic_count
        self._index = {s: i for i, s in enumerate(self.syllables)}
        # longest first for greedy matching
        self._ascii_keys = sorted(self.by_ascii, key=len, reverse=True)
        self.unit_chars = frozenset("".join(self.by_ascii) + "".join(VOWEL_BY_ASCII))

    def _add(self, syl, cp):
        if cp in self._cp_to_syl:
            raise ValueError(f"codepoint U+{cp:04X} assigned twice")
        self._cp_to_syl[cp] = syl
        self._syl_to_cp[syl] = cp
        self.syllables.append(syl)

    def __contains__(self, syl):
        return syl in self._syl_to_cp

    def codepoint(self, syl: Syllable) -> int:
        try:
            return self._syl_to_cp[syl]
        except KeyError:
            raise UnrepresentableSyllable(f"{syl!r} has no codepoint") from None

    def from_codepoint(self, cp: int):
        return self._cp_to_syl.get(cp)

    def match_consonant(self, text: str, pos: int):
        for key in self._ascii_keys:
            if text.startswith(key, pos):
                return key
        return None

    def index(self, syl: Syllable) -> int:
        return self._index[syl]


def load_chart(path=None) -> Chart:
    """Read a chart file; ``None`` loads the bundled Amharic chart."""
    if path is None:
        text = resources.files("geezpost.data").joinpath("chart.tsv").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    consonants = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 4:
            raise ValueError(f"chart line {lineno}: expected 4 tab-separated fields")
        ascii_, base, name, derived = parts
        table = {}
        if derived.strip() != "-":
            for item in derived.split(","):
                off, vowels = item.split(":")
                if len(vowels) != 2 or vowels[0] != "u" or vowels[1] not in VOWEL_BY_ASCII:
                    raise ValueError(f"chart line {lineno}: bad derived form {item!r}")
                table[VOWEL_BY_ASCII[vowels[1]]] = int(off)
        consonants.append(Consonant(ascii_, int(base, 16), name, table))
    return Chart(consonants)


@lru_cache(maxsize=None)
def default_chart() -> Chart:
    return load_chart()


_chart = default_chart()
BASIC_SYLLABLE_COUNT = _chart.basic_count  # 34 rows x 7 orders = 238
DERIVED_SYLLABLE_COUNT = _chart.derived_count  # 50
CHART_SIZE = BASIC_SYLLABLE_COUNT + DERIVED_SYLLABLE_COUNT
CONSONANT_COUNT = len(_chart.consonants)
del _chart


def detect_scheme(text: str) -> str:
    """``unicode`` if any Ethiopic codepoint is present, else ``ascii``."""
    lo, hi = ETHIOPIC_BLOCK
    for ch in text:
        if lo <= ord(ch) <= hi:
            return "unicode"
    return "ascii"


def _check_scheme(scheme):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


# -- tokenization -----------------------------------------------------------


def _ascii_syllable(text, pos, chart):
    cons = chart.match_consonant(text, pos)
    if cons is None:
        ch = text[pos]
        if ch in chart.unit_chars:
            raise AmbiguousTransliteration(f"no transliteration unit starts with {ch!r}", pos)
        raise UnknownGrapheme(f"character {ch!r} is not in the chart", pos)
    j = pos + len(cons)
    row = chart.by_ascii[cons]
    if text.startswith("u", j) and j + 1 < len(text):
        v2 = VOWEL_BY_ASCII.get(text[j + 1])
        if v2 is not None and v2 in row.derived:
            return Syllable(cons, 2, v2), j + 2
    if j < len(text) and text[j] in VOWEL_BY_ASCII:
        return Syllable(cons, VOWEL_BY_ASCII[text[j]]), j + 1
    return Syllable(cons, 6), j


def _phoneme_vowel(text, pos):
    for sym in _PHONEME_VOWELS:
        if text.startswith(sym, pos):
            return sym
    return None


def _phoneme_syllable(text, pos, chart):
    cons = chart.match_consonant(text, pos)
    if cons is None:
        if _phoneme_vowel(text, pos):
            raise DanglingVowel("vowel without a consonant", pos)
        raise UnknownGrapheme(f"character {text[pos]!r} is not a phoneme symbol", pos)
    j = pos + len(cons)
    v1 = _phoneme_vowel(text, j)
    if v1 is None:
        raise DanglingConsonant(f"consonant {cons!r} has no vowel", pos)
    j += len(v1)
    order = VOWEL_BY_PHONEME[v1]
    if order == 2:
        v2 = _phoneme_vowel(text, j)
        if v2 is not None:
            syl = Syllable(cons, 2, VOWEL_BY_PHONEME[v2])
            if syl not in chart:
                raise DanglingVowel(f"no derived form {cons}+u+{v2}", j)
            return syl, j + len(v2)
    return Syllable(cons, order), j


def tokenize(text: str, scheme: str, chart: Chart | None = None) -> list[Unit]:
    """Split *text* into units, keeping the surface string of each.

    Whitespace runs collapse to a single space unit; leading and trailing
    whitespace is dropped.
    """
    _check_scheme(scheme)
    chart = chart or default_chart()
    units: list[Unit] = []
    pos, n = 0, len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            end = pos
            while end < n and text[end].isspace():
                end += 1
            if units and end < n:
                units.append(Unit(SPACE, " "))
            pos = end
            continue
        if scheme == "unicode":
            syl = chart.from_codepoint(ord(ch))
            if syl is None:
                raise UnknownGrapheme(f"character {ch!r} (U+{ord(ch):04X}) is not in the chart", pos)
            units.append(Unit(syl, ch))
            pos += 1
        elif scheme == "ascii":
            syl, end = _ascii_syllable(text, pos, chart)
            units.append(Unit(syl, text[pos:end]))
            pos = end
        else:
            syl, end = _phoneme_syllable(text, pos, chart)
            units.append(Unit(syl, text[pos:end]))
            pos = end
    return units


def parse_surface(text: str, scheme: str = "ascii", chart: Chart | None = None) -> list[Token]:
    return [u.token for u in tokenize(text, scheme, chart)]


def render_syllable(syl: Syllable, scheme: str, chart: Chart | None = None) -> str:
    chart = chart or default_chart()
    if scheme == "unicode":
        return chr(chart.codepoint(syl))
    if syl not in chart:
        raise UnrepresentableSyllable(f"{syl!r} is not in the chart")
    if scheme == "ascii":
        if syl.derived is not None:
            return syl.consonant + "u" + VOWELS[syl.derived - 1].ascii
        if syl.vowel == 6:
            return syl.consonant
        return syl.consonant + VOWELS[syl.vowel - 1].ascii
    if scheme == "phoneme":
        return "".join(_phonemes_of(syl))
    _check_scheme(scheme)


def render(seq: Iterable[Token], scheme: str = "ascii", chart: Chart | None = None) -> str:
    _check_scheme(scheme)
    out = []
    for tok in seq:
        out.append(" " if tok is SPACE else render_syllable(tok, scheme, chart))
    return "".join(out)


def convert(text: str, src: str, dst: str, chart: Chart | None = None) -> str:
    return render(parse_surface(text, src, chart), dst, chart)


def canonicalize(seq: Sequence[Token]) -> list[Token]:
    """Drop leading/trailing spaces and merge adjacent ones."""
    out: list[Token] = []
    for tok in seq:
        if tok is SPACE and (not out or out[-1] is SPACE):
            continue
        out.append(tok)
    while out and out[-1] is SPACE:
        out.pop()
    return out


def words(seq: Sequence[Token]) -> list[tuple[Syllable, ...]]:
    """Group a token sequence into space-separated words."""
    out, cur = [], []
    for tok in seq:
        if tok is SPACE:
            if cur:
                out.append(tuple(cur))
            cur = []
        else:
            cur.append(tok)
    if cur:
        out.append(tuple(cur))
    return out


def join_words(ws: Iterable[Sequence[Syllable]]) -> list[Token]:
    out: list[Token] = []
    for w in ws:
        if not w:
            continue
        if out:
            out.append(SPACE)
        out.extend(w)
    return out


# -- phonemes ----------------------------------------------------------------


def _phonemes_of(syl: Syllable) -> list[str]:
    if syl.derived is not None:
        return [syl.consonant, VOWELS[1].phoneme, VOWELS[syl.derived - 1].phoneme]
    return [syl.consonant, VOWELS[syl.vowel - 1].phoneme]


def phonemize(seq: Iterable[Token]) -> list[str]:
    out: list[str] = []
    for tok in seq:
        if tok is SPACE:
            out.append(WORD_BOUNDARY)
        else:
            out.extend(_phonemes_of(tok))
    return out


def dephonemize(symbols: Sequence[str], chart: Chart | None = None) -> list[Token]:
    """Greedy consonant-vowel(-vowel) grouping; inverse of :func:`phonemize`."""
    chart = chart or default_chart()
    out: list[Token] = []
    i, n = 0, len(symbols)
    while i < n:
        sym = symbols[i]
        if sym == WORD_BOUNDARY:
            out.append(SPACE)
            i += 1
            continue
        if sym in VOWEL_BY_PHONEME:
            raise DanglingVowel(f"vowel {sym!r} has no consonant", i)
        if sym not in chart.by_ascii:
            raise UnknownGrapheme(f"unknown phoneme symbol {sym!r}", i)
        if i + 1 >= n or symbols[i + 1] not in VOWEL_BY_PHONEME:
            raise DanglingConsonant(f"consonant {sym!r} has no vowel", i)
        order = VOWEL_BY_PHONEME[symbols[i + 1]]
        i += 2
        if order == 2 and i < n and symbols[i] in VOWEL_BY_PHONEME:
            syl = Syllable(sym, 2, VOWEL_BY_PHONEME[symbols[i]])
            if syl not in chart:
                raise DanglingVowel(f"no derived form {sym}+u+{symbols[i]}", i)
            out.append(syl)
            i += 1
            continue
        out.append(Syllable(sym, order))
    return out


def iter_syllables(text: str, scheme: str | None = None) -> Iterator[Syllable]:
    for tok in parse_surface(text, scheme or detect_scheme(text)):
        if tok is not SPACE:
            yield tok
