"""HMM training and Viterbi decoding, checked against exhaustive search."""

import itertools
import random

import numpy as np
import pytest

from tagmark.corpus import Sentence
from tagmark.errors import TrainingError
from tagmark.taggers.hmm import LOG_FLOOR, hmm_tag, hmm_train, safe_log


def path_score(model, forms, path):
    observations = [model.observation(form) for form in forms]
    score = model.log_initial[path[0]] + model.log_emission[path[0], observations[0]]
    for i in range(1, len(path)):
        score += model.log_transition[path[i - 1], path[i]] + model.log_emission[path[i], observations[i]]
    return score


def brute_force_best(model, forms):
    n_tags = len(model.tagset)
    return max(path_score(model, forms, path) for path in itertools.product(range(n_tags), repeat=len(forms)))


def random_corpus(rng, tags, words, n):
    return [
        Sentence.from_pairs([(rng.choice(words), rng.choice(tags)) for _ in range(rng.randint(1, 5))])
        for _ in range(n)
    ]


def test_counts_and_smoothed_distributions():
    train = [
        Sentence.from_pairs([('the', 'DET'), ('dog', 'NOUN')]),
        Sentence.from_pairs([('dog', 'NOUN'), ('runs', 'VERB')]),
    ]
    model = hmm_train(train, alpha=0.0)
    det, noun, verb = (model.tagset.index(t) for t in ('DET', 'NOUN', 'VERB'))
    assert model.initial[det] == pytest.approx(0.5)
    assert model.initial[noun] == pytest.approx(0.5)
    assert model.transition[det, noun] == pytest.approx(1.0)
    assert model.transition[noun, verb] == pytest.approx(1.0)
    # the verb row never occurs as a predecessor: uniform
    assert model.transition[verb] == pytest.approx(np.full(3, 1 / 3))
    # hapaxes "the" and "runs" feed the unknown column
    assert model.unknown_counts[det] == 1
    assert model.unknown_counts[verb] == 1
    assert model.unknown_counts[noun] == 0


def test_zero_probability_scores_the_floor():
    assert safe_log(np.array([0.0, 1.0])).tolist() == [LOG_FLOOR, 0.0]


def test_tags_a_simple_sentence(corpus_100):
    model = hmm_train(corpus_100)
    assert model.tag(['the', 'dog', 'runs', '.']) == ['DET', 'NOUN', 'VERB', 'PUNCT']


def test_disambiguates_by_context(corpus_100):
    model = hmm_train(corpus_100)
    assert model.tag(['the', 'walk', 'sleeps', '.'])[1] == 'NOUN'
    assert model.tag(['dog', 'walk', 'the', 'cat', '.'])[1] == 'VERB'


def test_unknown_words_still_get_a_tag(corpus_100):
    model = hmm_train(corpus_100)
    tags = model.tag(['the', 'qwzx', 'runs', '.'])
    assert len(tags) == 4
    assert all(tag in model.tagset for tag in tags)


def test_empty_sentence():
    model = hmm_train([Sentence.from_pairs([('a', 'X')])])
    assert hmm_tag(model, []) == []


def test_negative_alpha_is_rejected(corpus_50):
    with pytest.raises(TrainingError):
        hmm_train(corpus_50, alpha=-1.0)


def test_viterbi_matches_exhaustive_search():
    rng = random.Random(7)
    for _ in range(250):
        tags = rng.sample(['A', 'B', 'C', 'D'], rng.randint(1, 4))
        words = ['w1', 'w2', 'w3', 'w4', 'w5']
        model = hmm_train(random_corpus(rng, tags, words, rng.randint(1, 8)), alpha=rng.choice([0.001, 0.1, 1.0]))
        forms = [rng.choice(words + ['unseen']) for _ in range(rng.randint(1, 5))]
        path = [model.tagset.index(tag) for tag in hmm_tag(model, forms)]
        assert path_score(model, forms, path) == pytest.approx(brute_force_best(model, forms), abs=1e-9)


def test_viterbi_returns_the_unique_best_path():
    rng = random.Random(17)
    checked = 0
    for _ in range(250):
        tags = rng.sample(['A', 'B', 'C', 'D'], rng.randint(1, 4))
        words = ['w1', 'w2', 'w3', 'w4', 'w5']
        model = hmm_train(random_corpus(rng, tags, words, rng.randint(1, 8)), alpha=rng.choice([0.001, 0.1, 1.0]))
        forms = [rng.choice(words + ['unseen']) for _ in range(rng.randint(1, 5))]
        scored = sorted(
            (path_score(model, forms, candidate), candidate)
            for candidate in itertools.product(range(len(model.tagset)), repeat=len(forms))
        )
        best, best_path = scored[-1]
        # near-ties are left to the score check above
        if len(scored) > 1 and scored[-2][0] > best - 1e-6:
            continue
        assert tuple(model.tagset.index(tag) for tag in hmm_tag(model, forms)) == best_path
        checked += 1
    assert checked >= 25


def test_ties_prefer_the_lowest_tag_index():
    model = hmm_train([Sentence.from_pairs([('x', 'B')]), Sentence.from_pairs([('x', 'A')])])
    assert hmm_tag(model, ['x']) == ['A']
    assert hmm_tag(model, ['x', 'x', 'x']) == ['A', 'A', 'A']
