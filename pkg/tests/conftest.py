"""Shared fixtures: resource bundles and a small generated corpus."""

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

from textreuse.corpus import GenSpec, generate  # noqa: E402
from textreuse.textnorm import load_resources  # noqa: E402


@pytest.fixture(scope="session")
def latin_res():
    return load_resources("latin")


@pytest.fixture(scope="session")
def persian_res():
    return load_resources("persian")


SMALL_SPEC = GenSpec(
    seed=11,
    n_src=8,
    n_susp=2,
    cases_per_susp=2,
    passage_len=4,
    src_sentences=12,
    susp_sentences=30,
    topic_pool_size=6,
)


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory):
    """A small verbatim corpus on disk, shared read-only across tests."""
    directory = tmp_path_factory.mktemp("smallcorpus")
    generate(SMALL_SPEC, directory)
    return directory


@pytest.fixture(scope="session")
def small_corpus(small_corpus_dir):
    from textreuse.corpus import load_corpus

    return load_corpus(small_corpus_dir)
