import pytest
from hypothesis import given

from geezpost.codec import (
    BASIC_SYLLABLE_COUNT,
    CHART_SIZE,
    CONSONANT_COUNT,
    DERIVED_SYLLABLE_COUNT,
    SCHEMES,
    SPACE,
    Syllable,
    convert,
    default_chart,
    dephonemize,
    detect_scheme,
    parse_surface,
    phonemize,
    render,
    render_syllable,
    tokenize,
    words,
)
from geezpost.errors import (
    AmbiguousTransliteration,
    DanglingConsonant,
    DanglingVowel,
    UnknownGrapheme,
    UnrepresentableSyllable,
)

from strategies import token_lists

CHART = default_chart()

# consonant rows of the sixth-order base table, in table order
TABLE4 = "h l m r s ^s q b v t ^c n ~n k w z ^z y d ^g g .t ^C .p .s f p _k".split()
# derived forms listed in the sample derived-character table
TABLE7 = {
    "huA": ("h", "A"), "luA": ("l", "A"), "muA": ("m", "A"), "suA": ("s", "A"),
    "^suA": ("^s", "A"), "quA": ("q", "A"), "buA": ("b", "A"), "tuA": ("t", "A"),
    "^cuA": ("^c", "A"), "nuA": ("n", "A"), "~nuA": ("~n", "A"), "kuA": ("k", "A"),
    "zuA": ("z", "A"), "^zuA": ("^z", "A"), "gui": ("g", "i"), "guE": ("g", "E"),
}
ORDERS = {"a": 1, "u": 2, "i": 3, "A": 4, "E": 5, "e": 6, "o": 7}


def test_chart_counts():
    assert CONSONANT_COUNT == 34
    assert BASIC_SYLLABLE_COUNT == 34 * 7
    assert DERIVED_SYLLABLE_COUNT == 50
    assert CHART_SIZE == len(CHART.syllables) == 288
    assert len(set(CHART.syllables)) == CHART_SIZE


def test_every_base_table_consonant_is_charted():
    for c in TABLE4:
        assert c in CHART.by_ascii, c


@pytest.mark.parametrize("text,expected", sorted(TABLE7.items()))
def test_derived_forms_from_sample_table(text, expected):
    cons, v2 = expected
    assert parse_surface(text) == [Syllable(cons, 2, ORDERS[v2])]


def test_lA_is_fourth_order():
    assert parse_surface("lA") == [Syllable("l", 4)]
    assert render([Syllable("l", 4)]) == "lA"


def test_empty_input():
    assert parse_surface("") == []
    assert render([]) == ""
    assert dephonemize([]) == []


def test_huA_is_hoa_codepoint():
    assert chr(CHART.codepoint(Syllable("h", 2, 4))) == "ሇ"


def test_first_row_matches_unicode_order():
    assert convert("ha hu hi hA hE he ho", "ascii", "unicode") == "ሀ ሁ ሂ ሃ ሄ ህ ሆ"


def test_greeting_sentence_in_unicode():
    assert convert("hagarA^cen salAme nawe", "ascii", "unicode") == "ሀገራችን ሰላም ነው"
    assert convert("ሀገራችን ሰላም ነው", "unicode", "ascii") == "hagarA^cn salAm naw"


def test_bare_consonant_is_sixth_order():
    assert parse_surface("salAm") == parse_surface("salAme")


def test_l_row_phonemes():
    row = [Syllable("l", k) for k in range(1, 8)]
    assert phonemize(row) == ["l", "'ua", "l", "'u", "l", "'i", "l", "'A", "l", "'E", "l", "'e", "l", "'o"]


def test_salame_phonemes():
    assert phonemize(parse_surface("salAme")) == ["s", "'ua", "l", "'A", "m", "'e"]


def test_derived_phonemes():
    assert phonemize([Syllable("g", 2, 5)]) == ["g", "'u", "'E"]
    assert dephonemize(["h", "'u", "'A"]) == [Syllable("h", 2, 4)]
    assert dephonemize(["l", "'ua"]) == [Syllable("l", 1)]


def test_word_boundary_symbol():
    seq = parse_surface("ha lo")
    assert phonemize(seq) == ["h", "'ua", "|", "l", "'o"]
    assert dephonemize(phonemize(seq)) == seq


def test_dephonemize_rejects_bare_consonant():
    with pytest.raises(DanglingConsonant):
        dephonemize(["l"])
    with pytest.raises(DanglingConsonant):
        dephonemize(["l", "m", "'a"])


def test_dephonemize_rejects_leading_vowel():
    with pytest.raises(DanglingVowel):
        dephonemize(["'A"])


def test_dephonemize_rejects_missing_derived_form():
    # 'y' has no labialised forms
    with pytest.raises(DanglingVowel):
        dephonemize(["y", "'u", "'A"])


def test_unknown_characters():
    with pytest.raises(UnknownGrapheme):
        parse_surface("hax", "ascii")
    with pytest.raises(UnknownGrapheme):
        parse_surface("ሀx", "unicode")


def test_lone_modifier_is_ambiguous():
    with pytest.raises(AmbiguousTransliteration) as info:
        parse_surface("ha^", "ascii")
    assert info.value.position == 2


def test_unrepresentable_syllable():
    with pytest.raises(UnrepresentableSyllable):
        render_syllable(Syllable("y", 2, 4), "unicode")


def test_whitespace_collapses():
    assert render(parse_surface("  ha \t  lo  ")) == "ha lo"


def test_detect_scheme():
    assert detect_scheme("hagar") == "ascii"
    assert detect_scheme("ሀገር") == "unicode"


def test_tokenize_keeps_surfaces():
    units = tokenize("salAme .ha", "ascii")
    assert [u.surface for u in units] == ["sa", "lA", "me", " ", ".ha"]


def test_every_chart_syllable_round_trips():
    for syl in CHART.syllables:
        for scheme in SCHEMES:
            assert parse_surface(render_syllable(syl, scheme), scheme) == [syl]
        assert dephonemize(phonemize([syl])) == [syl]


@given(token_lists)
def test_round_trip_all_schemes(seq):
    for scheme in SCHEMES:
        assert parse_surface(render(seq, scheme), scheme) == seq


@given(token_lists)
def test_scheme_conversions_compose(seq):
    text = render(seq, "unicode")
    for a in SCHEMES:
        for b in SCHEMES:
            via = convert(convert(text, "unicode", a), a, b)
            assert parse_surface(via, b) == seq


@given(token_lists)
def test_phonemes_round_trip(seq):
    assert dephonemize(phonemize(seq)) == seq


@given(token_lists)
def test_words_split_on_spaces(seq):
    ws = words(seq)
    assert sum(len(w) for w in ws) == sum(1 for t in seq if t is not SPACE)
    assert len(ws) == (seq.count(SPACE) + 1 if seq else 0)
