import pytest

from contourcomposer.composer import GeneratorConfig
from contourcomposer.pipeline import train_all

from helpers import synthetic_corpus


@pytest.fixture(scope="session")
def corpus():
    return synthetic_corpus()


@pytest.fixture(scope="session")
def trained(corpus):
    return train_all(corpus, GeneratorConfig())
