"""Most-frequent-tag baseline."""

from collections import Counter

import pytest

from tagmark.corpus import Sentence, TagSet
from tagmark.errors import TrainingError
from tagmark.taggers.unigram import modal_tag, train_unigram


def test_most_frequent_tag_per_form():
    train = [
        Sentence.from_pairs([('walk', 'VERB'), ('home', 'ADV')]),
        Sentence.from_pairs([('walk', 'NOUN'), ('walk', 'VERB')]),
    ]
    model = train_unigram(train)
    assert model.tag(['walk', 'home']) == ['VERB', 'ADV']


def test_unknown_forms_get_the_corpus_modal_tag():
    train = [Sentence.from_pairs([('a', 'DET'), ('b', 'NOUN'), ('c', 'NOUN')])]
    model = train_unigram(train)
    assert model.default_tag == 'NOUN'
    assert model.tag(['zzz']) == ['NOUN']


def test_ties_go_to_lowest_tag_index():
    tagset = TagSet(['VERB', 'NOUN'])
    assert modal_tag(Counter({'VERB': 2, 'NOUN': 2}), tagset) == 'NOUN'
    train = [Sentence.from_pairs([('x', 'VERB'), ('x', 'ADJ')])]
    assert train_unigram(train).tag(['x']) == ['ADJ']


def test_output_length_matches_input(corpus_100):
    model = train_unigram(corpus_100)
    for sentence in corpus_100[:10]:
        assert len(model.tag(sentence.forms)) == len(sentence)
    assert model.tag_sentences([[], ['dog']]) == [[], ['NOUN']]


def test_empty_corpus_is_rejected():
    with pytest.raises(TrainingError):
        train_unigram([])


def test_lexicon_matches_frequency_table(corpus_50):
    counts = {}
    for sentence in corpus_50:
        for token in sentence.tokens:
            counts.setdefault(token.form, Counter())[token.tag] += 1
    # tag sets are sorted, so lowest index means alphabetical
    expected = {form: min(tags, key=lambda tag: (-tags[tag], tag)) for form, tags in counts.items()}
    model = train_unigram(corpus_50)
    assert model.lexicon == expected
    overall = sum(counts.values(), Counter())
    assert model.default_tag == min(overall, key=lambda tag: (-overall[tag], tag))
