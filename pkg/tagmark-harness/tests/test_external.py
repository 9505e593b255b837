"""External tagger adapter over the line-based wire protocol."""

import sys

import pytest

from conftest import ECHO_TAGGER
from tagmark.corpus import write_curated
from tagmark.errors import ExternalTaggerError, ProtocolError
from tagmark.taggers import ExternalTagger, external_tag, tnt_train
from tagmark.taggers.external import check_alignment, decode_reply, encode_request, expand


def echo(*args, **kwargs):
    return ExternalTagger('echo', [sys.executable, str(ECHO_TAGGER), *args], **kwargs)


def test_request_framing():
    assert encode_request([['a', 'b'], [], ['c']]) == 'a\nb\n\n\nc\n\n##EOF##\n'


def test_reply_decoding():
    assert decode_reply(['X\n', 'Y\n', '\n', '\n', 'Z\n', '\n', '##EOF##\n', 'ignored\n']) == [['X', 'Y'], [], ['Z']]
    assert decode_reply(['X\n', '##EOF##\n']) == [['X']]


def test_alignment_errors_carry_the_sentence_index():
    with pytest.raises(ProtocolError) as info:
        check_alignment([['a'], ['b', 'c']], [['X'], ['Y']])
    assert info.value.sentence_index == 1
    with pytest.raises(ProtocolError):
        check_alignment([['a']], [['X'], ['Y']])


def test_placeholders_are_expanded():
    values = {'train': '/d/train.tsv', 'model_dir': '/m', 'language': 'en', 'seed': 3}
    assert expand(['fit', '{train}', '{model_dir}/x', '--seed={seed}'], values) == [
        'fit', '/d/train.tsv', '/m/x', '--seed=3',
    ]
    with pytest.raises(ExternalTaggerError, match='unknown placeholder'):
        expand(['{nope}'], values)


def test_tags_through_a_child_process(tmp_path):
    model = tmp_path / 'echo.model'
    model.write_text('NOUN\n', encoding='utf-8')
    tagger = echo('tag', str(model), artifacts=[model])
    assert tagger.tag_sentences([['a', 'b'], [], ['c']]) == [['NOUN', 'NOUN'], [], ['NOUN']]
    assert external_tag(tagger, [['d']]) == [['NOUN']]
    assert tagger.artifact_files() == [model]


@pytest.mark.asyncio
async def test_tag_async():
    tagger = echo('short', 'X')
    with pytest.raises(ProtocolError) as info:
        await tagger.tag_async([['a', 'b'], ['c']])
    assert info.value.sentence_index == 0


def test_crash_reports_exit_status_and_stderr():
    with pytest.raises(ExternalTaggerError) as info:
        echo('crash').tag_sentences([['a']])
    assert info.value.returncode == 3
    assert 'simulated failure' in info.value.stderr


def test_missing_executable():
    tagger = ExternalTagger('ghost', ['/nonexistent/tagger-binary'])
    with pytest.raises(ExternalTaggerError, match='cannot start'):
        tagger.tag_sentences([['a']])


def test_training_command(tmp_path, corpus_50):
    train = write_curated(corpus_50, tmp_path / 'data' / 'train.tsv')
    values = {'train': train, 'model_dir': tmp_path / 'model', 'language': 'en', 'seed': 0}
    (tmp_path / 'model').mkdir()
    tagger = echo(
        'tag', '{model_dir}/echo.model',
        train_command=[sys.executable, str(ECHO_TAGGER), 'train', '{train}', '{model_dir}/echo.model'],
        artifacts=['{model_dir}/echo.model'],
        values=values,
    )
    tagger.train()
    assert tagger.artifact_files() == [tmp_path / 'model' / 'echo.model']
    assert tagger.tag_sentences([['x']]) == [['NOUN']]


def test_failing_training_command():
    tagger = echo('tag', 'unused', train_command=[sys.executable, str(ECHO_TAGGER), 'crash'])
    with pytest.raises(ExternalTaggerError, match='training command failed'):
        tagger.train()


def test_builtin_model_behind_the_adapter_matches_in_process(tmp_path, corpus_100, corpus_50):
    model = tnt_train(corpus_100, language='en')
    [artifact] = model.serialize(tmp_path)
    spec = model.inference_process(tmp_path / 'unused.request')
    adapter = ExternalTagger.from_process('tnt-served', spec, artifacts=[artifact])
    sentences = [s.forms for s in corpus_50] + [['Unseen', 'tokens', '!']]
    assert adapter.tag_sentences(sentences) == model.tag_sentences(sentences)
