"""Brill transformation-based learning and rule application."""

import pytest

from tagmark.corpus import Sentence, load_treebank
from tagmark.errors import TrainingError
from tagmark.taggers.brill import (
    TEMPLATES,
    BrillModel,
    BrillRule,
    apply_rule,
    brill_train,
    template_args,
    training_errors,
    tune_on_dev,
)
from tagmark.taggers.unigram import train_unigram


def to_corpus():
    go = Sentence.from_pairs([('go', 'VERB'), ('to', 'ADP'), ('school', 'NOUN')])
    want = Sentence.from_pairs([('want', 'VERB'), ('to', 'PART'), ('run', 'VERB')])
    return [go] * 8 + [want] * 5


def test_learns_the_contextual_rule():
    model = brill_train(to_corpus())
    assert model.rules == [BrillRule('NEXTTAG', ('VERB',), 'ADP', 'PART', 5)]
    assert training_errors(model, to_corpus()) == [5, 0]
    assert model.tag(['want', 'to', 'run']) == ['VERB', 'PART', 'VERB']
    assert model.tag(['go', 'to', 'school']) == ['VERB', 'ADP', 'NOUN']


def test_high_threshold_learns_nothing():
    model = brill_train(to_corpus(), threshold=6)
    assert model.rules == []
    assert model.tag(['want', 'to', 'run']) == train_unigram(to_corpus()).tag(['want', 'to', 'run'])


def test_max_rules_caps_the_list(corpus_100):
    assert brill_train(corpus_100, threshold=1, max_rules=0).rules == []
    assert len(brill_train(corpus_100, threshold=1, max_rules=1).rules) <= 1


def test_each_rule_reduces_training_errors_by_its_gain(corpus_100):
    model = brill_train(corpus_100, threshold=1)
    errors = training_errors(model, corpus_100)
    assert len(errors) == len(model.rules) + 1
    for rule, before, after in zip(model.rules, errors, errors[1:]):
        assert rule.gain >= 1
        assert before - after == rule.gain


def test_triggers_see_the_sentence_before_the_pass():
    rule = BrillRule('PREVTAG', ('NOUN',), 'NOUN', 'VERB')
    tags = ['NOUN', 'NOUN', 'NOUN']
    assert apply_rule(rule, ['a', 'b', 'c'], tags) == [1, 2]
    assert tags == ['NOUN', 'VERB', 'VERB']


def test_out_of_bounds_context_never_fires():
    words, tags = ['x', 'y'], ['A', 'B']
    for template in range(len(TEMPLATES)):
        name = TEMPLATES[template][0]
        if name.startswith('NEXT') or name == 'SURROUNDTAG':
            assert template_args(template, words, tags, 1) == []
    assert template_args(0, words, tags, 0) == []


def test_disjunctive_templates_deduplicate_arguments():
    words = ['a', 'b', 'c', 'd']
    tags = ['X', 'X', 'Y', 'Z']
    assert template_args(6, words, tags, 3) == [('Y',), ('X',)]


def test_rule_validation():
    with pytest.raises(ValueError):
        BrillRule('NOPE', ('X',), 'A', 'B')
    with pytest.raises(ValueError):
        BrillRule('SURROUNDTAG', ('X',), 'A', 'B')
    with pytest.raises(ValueError):
        BrillRule('PREVTAG', ('X',), 'A', 'A')


def test_tune_on_dev_drops_harmful_rules():
    model = brill_train(to_corpus())
    dev = [Sentence.from_pairs([('go', 'VERB'), ('to', 'ADP'), ('run', 'VERB')])]
    tuned = tune_on_dev(model, dev)
    assert tuned.rules == []
    assert tune_on_dev(model, to_corpus()).rules == model.rules


def test_rules_must_use_known_tags():
    initial = train_unigram(to_corpus())
    with pytest.raises(ValueError):
        BrillModel('xx', initial, [BrillRule('PREVTAG', ('VERB',), 'ADP', 'ADJ')])


def test_invalid_threshold():
    with pytest.raises(TrainingError):
        brill_train(to_corpus(), threshold=0)


def test_perfect_baseline_learns_no_rules():
    train = [
        Sentence.from_pairs([('go', 'VERB'), ('to', 'ADP'), ('school', 'NOUN')]),
        Sentence.from_pairs([('run', 'VERB'), ('to', 'ADP'), ('school', 'NOUN')]),
    ] * 5
    model = brill_train(train, threshold=1)
    assert model.rules == []
    assert training_errors(model, train) == [0]


@pytest.mark.slow
def test_training_errors_never_increase_on_a_real_treebank(ud_root):
    directory = ud_root / 'UD_English-GUM'
    if not directory.is_dir():
        pytest.skip('UD_English-GUM not available')
    train = load_treebank(directory, 'en').train
    model = brill_train(train, language='en', max_rules=100)
    errors = training_errors(model, train)
    assert len(errors) == len(model.rules) + 1 <= 101
    assert all(before >= after for before, after in zip(errors, errors[1:]))
