"""CoNLL-U parsing, curation and treebank loading."""

import pytest

from tagmark.corpus import (
    CurationOptions,
    Sentence,
    UPOS_TAGS,
    TagSet,
    curate,
    load_treebank,
    parse_conllu,
    read_conllu,
    read_curated,
    to_conllu,
    write_curated,
)
from tagmark.errors import ConllUParseError, TreebankLoadError
from tagmark.metrics import accuracy
from tagmark.taggers import train_builtin


def row(token_id, form, tag):
    return '\t'.join([str(token_id), form, '_', tag, '_', '_', '_', '_', '_', '_'])


def test_range_and_empty_nodes_are_skipped():
    text = '\n'.join([
        '# sent_id = a',
        row('1-2', "don't", '_'),
        row(1, 'do', 'AUX'),
        row(2, "n't", 'PART'),
        row('2.1', 'ghost', 'VERB'),
        row(3, 'go', 'VERB'),
        '',
    ])
    [sentence] = parse_conllu(text)
    assert sentence.forms == ['do', "n't", 'go']
    assert sentence.tags == ['AUX', 'PART', 'VERB']
    assert sentence.source_id == 'a'


def test_bad_column_count_reports_line_number():
    text = '\n'.join(['# sent_id = a', row(1, 'x', 'NOUN'), '2\ty\t_\tNOUN', ''])
    with pytest.raises(ConllUParseError) as info:
        parse_conllu(text, source='mem')
    assert info.value.line_number == 3
    assert 'mem:3' in str(info.value)


def test_unknown_tag_is_rejected():
    with pytest.raises(ConllUParseError) as info:
        parse_conllu(row(1, 'x', 'NN') + '\n')
    assert info.value.line_number == 1


def test_any_tag_without_inventory():
    [sentence] = parse_conllu(row(1, 'x', 'NN') + '\n', tag_inventory=None)
    assert sentence.tags == ['NN']


def test_truncated_final_sentence_is_closed():
    sentences = parse_conllu(row(1, 'a', 'DET') + '\n' + row(2, 'b', 'NOUN'))
    assert len(sentences) == 1
    assert sentences[0].forms == ['a', 'b']


def test_invalid_utf8_reports_line(tmp_path):
    path = tmp_path / 'bad.conllu'
    path.write_bytes((row(1, 'ok', 'NOUN') + '\n').encode() + b'2\t\xff\xfe\t_\tNOUN\t_\t_\t_\t_\t_\t_\n')
    with pytest.raises(ConllUParseError) as info:
        read_conllu(path)
    assert info.value.line_number == 2


def test_curation_drops_placeholder_tokens_and_empty_sentences():
    sentences = [
        Sentence.from_pairs([('a', 'DET'), ('x', '_'), ('b', 'NOUN')]),
        Sentence.from_pairs([('_', '_')]),
    ]
    curated = curate(sentences)
    assert len(curated) == 1
    assert curated[0].forms == ['a', 'b']


def test_svmtool_compat_appends_full_stop():
    sentences = [Sentence.from_pairs([('go', 'VERB')]), Sentence.from_pairs([('go', 'VERB'), ('.', 'PUNCT')])]
    curated = curate(sentences, CurationOptions(svmtool_compat=True))
    assert curated[0].forms == ['go', '.']
    assert curated[0].tags == ['VERB', 'PUNCT']
    assert curated[1].forms == ['go', '.']


def test_conllu_round_trip(corpus_100):
    assert parse_conllu(to_conllu(corpus_100)) == corpus_100


def test_curated_format_round_trip(tmp_path, corpus_50):
    path = write_curated(corpus_50, tmp_path / 'train.tsv')
    assert [s.tokens for s in read_curated(path)] == [s.tokens for s in corpus_50]


def test_tagset_is_sorted_and_indexes_by_position():
    tagset = TagSet(['VERB', 'DET', 'NOUN', 'DET'])
    assert tagset.labels == ('DET', 'NOUN', 'VERB')
    assert tagset.index('NOUN') == 1
    assert tagset.label(2) == 'VERB'
    assert 'ADJ' not in tagset


def test_load_toy_treebank(toy_treebank_dir):
    treebank = load_treebank(toy_treebank_dir, 'xx')
    assert treebank.name == 'TOY'
    assert len(treebank.train) == 7
    assert len(treebank.dev) == 2
    assert len(treebank.test) == 3
    stats = treebank.statistics()
    assert stats['train'].tokens == 33
    assert stats['test'].tokens == 13
    assert sum(s.token_share for s in stats.values()) == pytest.approx(1.0)
    assert 'AUX' in treebank.tagset()


def test_missing_split_is_named(tmp_path, toy_treebank_dir):
    for name in ('xx_toy-ud-train.conllu', 'xx_toy-ud-dev.conllu'):
        (tmp_path / name).write_bytes((toy_treebank_dir / name).read_bytes())
    with pytest.raises(TreebankLoadError, match='missing split: test'):
        load_treebank(tmp_path, 'xx')


def test_shared_sentence_ids_between_splits(tmp_path, toy_treebank_dir):
    for split in ('train', 'dev'):
        name = f'xx_toy-ud-{split}.conllu'
        (tmp_path / name).write_bytes((toy_treebank_dir / name).read_bytes())
    (tmp_path / 'xx_toy-ud-test.conllu').write_bytes((toy_treebank_dir / 'xx_toy-ud-dev.conllu').read_bytes())
    with pytest.raises(TreebankLoadError, match='appears in both'):
        load_treebank(tmp_path, 'xx')


@pytest.mark.slow
def test_real_english_treebank(ud_root):
    directory = ud_root / 'UD_English-GUM'
    if not directory.is_dir():
        pytest.skip('UD_English-GUM not available')
    treebank = load_treebank(directory, 'en')
    assert all(treebank.split(name) for name in ('train', 'dev', 'test'))
    assert set(treebank.tagset().labels) <= UPOS_TAGS

    model = train_builtin('unigram', treebank.train, language='en')
    gold = [s.tags for s in treebank.test]
    assert accuracy(gold, [model.tag(s.forms) for s in treebank.test]).token_accuracy > 0.7


@pytest.mark.slow
@pytest.mark.parametrize('kind, floor', [('hmm', 0.78), ('tnt', 0.75), ('brill', 0.79)])
def test_classical_taggers_on_real_english(ud_root, kind, floor):
    directory = ud_root / 'UD_English-GUM'
    if not directory.is_dir():
        pytest.skip('UD_English-GUM not available')
    treebank = load_treebank(directory, 'en')
    model = train_builtin(kind, treebank.train, treebank.dev, language='en')
    gold = [s.tags for s in treebank.test]
    assert accuracy(gold, [model.tag(s.forms) for s in treebank.test]).token_accuracy > floor
