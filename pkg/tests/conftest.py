import os

import pytest
from hypothesis import HealthCheck, settings

from geezpost.synthetic import ToyCorpusConfig, toy_corpus

settings.register_profile(
    "default",
    deadline=None,
    max_examples=int(os.environ.get("GEEZPOST_EXAMPLES", "150")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_corpus():
    return toy_corpus(ToyCorpusConfig(sentences=400, vocabulary=300, seed=11))
