"""Shared fixtures for the tagmark test suite."""

import os
import random
import sys
from pathlib import Path
from typing import List

import pytest
from loguru import logger

# Add src directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from tagmark.corpus import Sentence  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
TOY_TREEBANK = FIXTURES / "UD_Toy-Test"
ECHO_TAGGER = FIXTURES / "echo_tagger.py"

VOCABULARY = {
    'DET': ['the', 'a', 'this', 'every'],
    'NOUN': ['dog', 'cat', 'house', 'idea', 'river', 'walk'],
    'VERB': ['runs', 'sleeps', 'walk', 'sees', 'likes'],
    'ADJ': ['big', 'green', 'quiet', 'old'],
    'ADV': ['fast', 'home', 'often'],
    'PUNCT': ['.', '!'],
}
PATTERNS = [
    ['DET', 'NOUN', 'VERB', 'PUNCT'],
    ['DET', 'ADJ', 'NOUN', 'VERB', 'ADV', 'PUNCT'],
    ['NOUN', 'VERB', 'DET', 'NOUN', 'PUNCT'],
    ['DET', 'NOUN', 'VERB', 'DET', 'ADJ', 'NOUN', 'PUNCT'],
    ['NOUN', 'VERB', 'ADV', 'PUNCT'],
]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: process-level tests that take several seconds")


def _stderr_sink(message):
    # resolve sys.stderr per message so pytest's capture swaps are honoured
    sys.stderr.write(message)


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    logger.remove()
    logger.add(_stderr_sink, level="DEBUG", format="{time} - {name} - {level} - {message}")


def synthetic_corpus(n: int, seed: int = 0) -> List[Sentence]:
    """Deterministic pseudo-English sentences; some forms are ambiguous (walk)."""
    rng = random.Random(seed)
    sentences = []
    for i in range(n):
        pattern = rng.choice(PATTERNS)
        pairs = [(rng.choice(VOCABULARY[tag]), tag) for tag in pattern]
        if rng.random() < 0.3:
            pairs[0] = (pairs[0][0].capitalize(), pairs[0][1])
        sentences.append(Sentence.from_pairs(pairs, source_id=f"s{seed}-{i}"))
    return sentences


@pytest.fixture
def toy_treebank_dir() -> Path:
    return TOY_TREEBANK


@pytest.fixture
def corpus_100() -> List[Sentence]:
    return synthetic_corpus(100, seed=1)


@pytest.fixture
def corpus_50() -> List[Sentence]:
    return synthetic_corpus(50, seed=2)


@pytest.fixture
def ud_root() -> Path:
    """Real UD treebanks (e.g. ud-treebanks-v2.6); tests using it skip without TAGMARK_UD_ROOT."""
    root = os.environ.get("TAGMARK_UD_ROOT")
    if not root or not Path(root).is_dir():
        pytest.skip("TAGMARK_UD_ROOT not set")
    return Path(root)
