import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from geezpost.codec import SPACE, default_chart, parse_surface, render, tokenize
from geezpost.corrector import (
    BOS,
    CorrectionConfig,
    ExternalCorrector,
    Lexicon,
    NGramModel,
    Segmenter,
    correct_pipeline,
    edit_cost,
    exhaustive_best,
    load_model,
    save_model,
    segment,
    train_lm,
)
from geezpost.corruptor import CorruptionConfig, generate_pairs
from geezpost.errors import ConfigError, EmptyCorpus

CHART = default_chart()
FIVE = ["hagarA^cen", "salAme", "nawe", "garA", "lAme"]


@pytest.fixture(scope="module")
def five():
    return train_lm(FIVE, order=1)


def _stream(text, mode="soft"):
    units = tokenize(text, "ascii")
    syls, spaces = [], set()
    for u in units:
        if u.token is SPACE:
            spaces.add(len(syls))
        else:
            syls.append(u.token)
    return syls, (set() if mode == "ignore" else spaces)


def test_single_word_unchanged(five):
    lex, lm = five
    assert segment("salAme", lex, lm) == "salAme"


def test_spacing_repair(five):
    lex, lm = five
    assert segment("ha garA ^cen sa lAme nawe", lex, lm, CorrectionConfig(edit_budget=0)) == "hagarA^cen salAme nawe"


def test_missing_syllable_restored(five):
    lex, lm = five
    assert segment("ha garA ^cen sa lAme na", lex, lm, CorrectionConfig(edit_budget=1)) == "hagarA^cen salAme nawe"


@pytest.mark.parametrize("mode", ["ignore", "soft", "hard"])
@pytest.mark.parametrize("text", ["ha garA ^cen sa lAme na", "ha garA ^cen sa lAme nawe", "hagarA^censalAmena"])
def test_spacing_instances_match_oracle(five, mode, text):
    lex, lm = five
    seg = Segmenter(lex, lm, CorrectionConfig(trust_input_spaces=mode))
    syls, spaces = _stream(text, mode)
    score, _ = seg.search(syls, spaces)
    assert score == pytest.approx(exhaustive_best(seg, syls, spaces), abs=1e-9)


def test_hard_mode_keeps_input_spaces(five):
    lex, lm = five
    out = segment("ha garA ^cen sa lAme na", lex, lm, CorrectionConfig(trust_input_spaces="hard"))
    assert out.count(" ") >= 5


def test_unicode_input_gets_unicode_output(five):
    lex, lm = five
    assert segment("ሀ ገራ ቸን ሰ ላሜ ነ", lex, lm) == "ሀገራችን ሰላም ነው"


def test_empty_input(five):
    lex, lm = five
    assert segment("", lex, lm) == ""


def test_oov_run_keeps_input_surface(five):
    lex, lm = five
    assert segment("bobobo", lex, lm) == "bobobo"


def test_config_validation():
    with pytest.raises(ConfigError):
        CorrectionConfig(edit_budget=-1)
    with pytest.raises(ConfigError):
        CorrectionConfig(beam_width=0)
    with pytest.raises(ConfigError):
        CorrectionConfig(trust_input_spaces="maybe")
    with pytest.raises(ConfigError):
        CorrectionConfig.from_dict({"edit_budgett": 1})


def test_edit_cost_operations():
    a, b = parse_surface("salAme"), parse_surface("salAmena")
    assert edit_cost(a, b, (4.0, 3.0, 8.0)) == (1, 8.0)
    assert edit_cost(b, a, (4.0, 3.0, 8.0)) == (1, 3.0)
    assert edit_cost(a, parse_surface("salAma"), (4.0, 3.0, 8.0)) == (1, 4.0)
    assert edit_cost(a, a, (1, 1, 1)) == (0, 0)


def test_lm_one_sentence():
    lex, lm = train_lm(["ha lo"])
    assert lex.words == {"ha", "lo"}
    best = max(lex.surfaces, key=lambda w: lm.logprob(w, "ha"))
    assert best == "lo"


def test_lm_hand_counts():
    corpus = ["ha lo ha", "lo mi", "ha"]
    _, lm = train_lm(corpus)
    assert dict(lm.unigrams) == {"ha": 3, "lo": 2, "mi": 1}
    assert lm.bigrams[BOS] == {"ha": 2, "lo": 1}
    assert lm.bigrams["ha"] == {"lo": 1}


def test_lm_order_independent():
    corpus = ["ha lo ha", "lo mi", "ha", "mi mi lo"]
    a = train_lm(corpus)
    b = train_lm(list(reversed(corpus)))
    assert a[0] == b[0]
    assert a[1].unigrams == b[1].unigrams and a[1].bigrams == b[1].bigrams


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        train_lm(["", "   "])


@pytest.mark.parametrize("order", [1, 2])
def test_distributions_sum_to_one(small_corpus, order):
    lex, lm = train_lm(small_corpus, order=order)
    for prev in [BOS, "<unk>", next(iter(lex.surfaces)), "never-seen"]:
        total = sum(math.exp(lm.logprob(w, prev)) for w in lex.surfaces) + math.exp(lm.logprob(None, prev))
        assert total == pytest.approx(1.0, abs=1e-9)


def test_most_frequent_spelling_wins():
    lex, _ = train_lm(["salAme", "salAm", "salAm"])
    assert lex.surfaces["salAm"] == "salAm"


def test_model_file_round_trip(tmp_path, small_corpus):
    lex, lm = train_lm(small_corpus)
    save_model(lex, lm, tmp_path / "m.lm")
    lex2, lm2 = load_model(tmp_path / "m.lm")
    assert lex2.surfaces == lex.surfaces and lex2.syllables == lex.syllables
    assert lm2.unigrams == lm.unigrams and lm2.bigrams == lm.bigrams
    text = small_corpus[3].replace(" ", "")
    assert segment(text, lex2, lm2) == segment(text, lex, lm)


def test_model_file_header(tmp_path):
    (tmp_path / "x").write_text("hello\n")
    with pytest.raises(ConfigError):
        load_model(tmp_path / "x")


def _toy_lexicon(rng, size):
    pool = [s for s in CHART.syllables if s.derived is None][:60]
    words = set()
    while len(words) < size:
        words.add(tuple(rng.sample(pool, rng.randint(1, 3))))
    return [render(w) for w in sorted(words, key=render)]


@pytest.mark.parametrize("order", [1, 2])
@pytest.mark.parametrize("mode", ["ignore", "soft", "hard"])
def test_viterbi_matches_exhaustive(order, mode):
    rng = random.Random(order * 10 + len(mode))
    vocab = _toy_lexicon(rng, 20)
    lines = [" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 5))) for _ in range(60)]
    lex, lm = train_lm(lines, order=order)
    seg = Segmenter(lex, lm, CorrectionConfig(trust_input_spaces=mode))
    cfg = CorruptionConfig(seed=order)
    checked = 0
    for rec in generate_pairs(lines, cfg):
        syls, spaces = _stream(rec.corrupted, mode)
        if not 0 < len(syls) <= 9:
            continue
        score, path = seg.search(syls, spaces)
        assert score == pytest.approx(exhaustive_best(seg, syls, spaces), abs=1e-9)
        assert [e.start for e in path][0] == 0 and path[-1].end == len(syls)
        checked += 1
    assert checked > 20


@given(st.lists(st.sampled_from(FIVE + ["ha", "na", "bo"]), min_size=1, max_size=4), st.integers(0, 6))
def test_output_closure(five, ws, cut):
    lex, lm = five
    syls = [t for w in ws for t in parse_surface(w)]
    if 0 < cut < len(syls):
        text = render(syls[:cut]) + " " + render(syls[cut:])
    else:
        text = render(syls)
    out = Segmenter(lex, lm).segment(text)
    pos = 0
    for e, w in zip(out.path, out.text.split()):
        if e.word is None:
            assert parse_surface(w) == syls[e.start : e.end]
        else:
            assert w in lex.words
        pos = e.end
    assert pos == len(syls)


def test_deterministic(small_corpus):
    lex, lm = train_lm(small_corpus[:300])
    texts = [line.replace(" ", "") for line in small_corpus[300:320]]
    a = [segment(t, lex, lm) for t in texts]
    b = [segment(t, lex, lm) for t in texts]
    assert a == b


def test_space_errors_only_exact_match(small_corpus):
    lex, lm = train_lm(small_corpus)
    cfg = CorruptionConfig(seed=3).only(p_space_insert=0.15, p_space_delete=0.3)
    pairs = list(generate_pairs(small_corpus[:200], cfg))
    fixed = correct_pipeline([(p.id, p.corrupted) for p in pairs], lex, lm)
    exact = sum(f == p.clean for (_, f), p in zip(fixed, pairs))
    assert exact / len(pairs) >= 0.99


def test_pipeline_empty_and_disabled(five):
    lex, lm = five
    assert correct_pipeline([], lex, lm) == []
    hyps = [("1", "ha garA"), ("2", "x!")]
    assert correct_pipeline(hyps, None, None, CorrectionConfig(enabled=False)) == hyps


def test_pipeline_counts_failures(five):
    lex, lm = five
    stats = {}
    from geezpost.normalizer import NormalizationConfig

    out = correct_pipeline([("1", "ha^")], lex, lm, norm_cfg=NormalizationConfig(strip_nonscript=False, strict=True),
                           stats=stats)
    assert out == [("1", "ha^")] and stats["failed"] == 1


def test_pipeline_parallel_keeps_order(small_corpus):
    lex, lm = train_lm(small_corpus)
    hyps = [(str(i), line.replace(" ", "")) for i, line in enumerate(small_corpus[:40])]
    assert correct_pipeline(hyps, lex, lm, jobs=2) == correct_pipeline(hyps, lex, lm)


def test_external_corrector():
    ext = ExternalCorrector(["tr", "a", "o"])
    assert correct_pipeline([("1", "ha"), ("2", "la")], None, None, external=ext) == [("1", "ho"), ("2", "lo")]


def test_lexicon_from_words():
    lex = Lexicon.from_words(["salAme", "ሰላም"])
    assert len(lex) == 1 and lex.words == {"salAme"}
    with pytest.raises(ValueError):
        Lexicon.from_words(["ha lo"])


def test_beam_of_one_still_returns_full_path(small_corpus):
    lex, lm = train_lm(small_corpus)
    seg = Segmenter(lex, lm, CorrectionConfig(beam_width=1))
    text = small_corpus[5].replace(" ", "")
    out = seg.segment(text)
    assert out.text.replace(" ", "") == text or out.path
