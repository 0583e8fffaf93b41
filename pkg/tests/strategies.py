"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from geezpost.codec import SPACE, canonicalize, default_chart

CHART = default_chart()

syllables = st.sampled_from(CHART.syllables)
token_lists = st.lists(st.one_of(syllables, syllables, st.just(SPACE)), max_size=30).map(canonicalize)
words = st.lists(syllables, min_size=1, max_size=5).map(tuple)
