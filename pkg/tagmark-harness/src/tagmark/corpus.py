"""
CoNLL-U ingestion and curation for tagger benchmarking.

Reads Universal Dependencies treebanks, keeps only what tagging needs
(surface form + UPOS tag per syntactic word), and exposes the
train/dev/test splits as immutable token-tag sequences.

Curation rules:
    - multiword-token range lines ("3-4") and empty nodes ("5.1") never
      become tokens; their sub-tokens (simple ids) are kept
    - tokens whose UPOS is the "_" placeholder are removed, and sentences
      left empty are dropped
    - optional SVMTool compatibility: every sentence ends with a full stop

Two text formats are understood: CoNLL-U (10 columns) and the internal
curated format, one "form<TAB>tag" line per token with a blank line
between sentences.
"""

import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, TextIO, Tuple, Union

from loguru import logger

from .errors import ConllUParseError, TreebankLoadError

UPOS_TAGS: FrozenSet[str] = frozenset({
    'ADJ', 'ADP', 'ADV', 'AUX', 'CCONJ', 'DET', 'INTJ', 'NOUN', 'NUM',
    'PART', 'PRON', 'PROPN', 'PUNCT', 'SCONJ', 'SYM', 'VERB', 'X',
})
PLACEHOLDER = '_'
SPLITS = ('train', 'dev', 'test')

_SIMPLE_ID = re.compile(r'^[1-9][0-9]*$')
_RANGE_ID = re.compile(r'^[1-9][0-9]*-[1-9][0-9]*$')
_EMPTY_NODE_ID = re.compile(r'^[0-9]+\.[1-9][0-9]*$')


@dataclass(frozen=True)
class Token:
    form: str
    tag: str

    def __post_init__(self):
        if not self.form:
            raise ValueError('token form must be non-empty')
        if not self.tag:
            raise ValueError(f'token {self.form!r} has an empty tag')


@dataclass(frozen=True)
class Sentence:
    tokens: Tuple[Token, ...]
    source_id: Optional[str] = None

    @property
    def forms(self) -> List[str]:
        return [token.form for token in self.tokens]

    @property
    def tags(self) -> List[str]:
        return [token.tag for token in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, str]], source_id: Optional[str] = None) -> 'Sentence':
        return cls(tuple(Token(form, tag) for form, tag in pairs), source_id)


class TagSet:
    """
    Ordered tag inventory with a dense index.

    Labels are kept in sorted order so the index of a tag never depends on
    corpus order; "lowest index wins" tie-breaking in the taggers relies
    on that.
    """

    def __init__(self, labels: Iterable[str]):
        self._labels: Tuple[str, ...] = tuple(sorted(set(labels)))
        self._index: Dict[str, int] = {label: i for i, label in enumerate(self._labels)}

    @classmethod
    def from_sentences(cls, *corpora: Iterable[Sentence]) -> 'TagSet':
        return cls(token.tag for corpus in corpora for sentence in corpus for token in sentence.tokens)

    @property
    def labels(self) -> Tuple[str, ...]:
        return self._labels

    def index(self, label: str) -> int:
        return self._index[label]

    def label(self, index: int) -> str:
        return self._labels[index]

    def union(self, labels: Iterable[str]) -> 'TagSet':
        return TagSet(list(self._labels) + list(labels))

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label: object) -> bool:
        return label in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self._labels)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TagSet) and self._labels == other._labels

    def __hash__(self) -> int:
        return hash(self._labels)

    def __repr__(self) -> str:
        return f"TagSet({list(self._labels)!r})"


@dataclass(frozen=True)
class CurationOptions:
    svmtool_compat: bool = False
    full_stop_form: str = '.'
    full_stop_tag: str = 'PUNCT'


@dataclass(frozen=True)
class SplitStatistics:
    sentences: int
    tokens: int
    token_share: float


@dataclass(frozen=True)
class Treebank:
    language: str
    name: str
    train: Tuple[Sentence, ...]
    dev: Tuple[Sentence, ...]
    test: Tuple[Sentence, ...]
    files: Dict[str, Path] = field(default_factory=dict, compare=False)

    def split(self, name: str) -> Tuple[Sentence, ...]:
        if name not in SPLITS:
            raise KeyError(f"unknown split: {name}")
        return getattr(self, name)

    def tagset(self) -> TagSet:
        """Evaluation tag set: tags of all three splits."""
        return TagSet.from_sentences(self.train, self.dev, self.test)

    def statistics(self) -> Dict[str, SplitStatistics]:
        token_counts = {name: sum(len(s) for s in self.split(name)) for name in SPLITS}
        total = sum(token_counts.values()) or 1
        return {
            name: SplitStatistics(
                sentences=len(self.split(name)),
                tokens=token_counts[name],
                token_share=token_counts[name] / total,
            )
            for name in SPLITS
        }


def _lines(text: Union[str, TextIO, Iterable[str]]) -> Iterator[str]:
    if isinstance(text, str):
        return iter(io.StringIO(text))
    return iter(text)


def parse_conllu(
    text: Union[str, TextIO, Iterable[str]],
    tag_inventory: Optional[FrozenSet[str]] = UPOS_TAGS,
    source: Optional[str] = None,
) -> List[Sentence]:
    """
    Parse CoNLL-U text into sentences of (FORM, UPOS) tokens.

    Range lines and empty-node lines are skipped. A sentence still open at
    end of input is closed. Pass tag_inventory=None to accept any tag.

    Raises:
        ConllUParseError: wrong column count, malformed ID, empty form, or a
            tag outside the inventory; carries the 1-based line number.
    """
    sentences: List[Sentence] = []
    tokens: List[Token] = []
    source_id: Optional[str] = None

    def close():
        nonlocal tokens, source_id
        if tokens:
            sentences.append(Sentence(tuple(tokens), source_id))
        tokens = []
        source_id = None

    for line_number, raw in enumerate(_lines(text), start=1):
        line = raw.rstrip('\r\n')
        if not line.strip():
            close()
            continue
        if line.startswith('#'):
            key, sep, value = line[1:].partition('=')
            if sep and key.strip() == 'sent_id':
                source_id = value.strip()
            continue

        columns = line.split('\t')
        if len(columns) != 10:
            raise ConllUParseError(f"expected 10 tab-separated columns, found {len(columns)}", line_number, source)

        token_id, form, upos = columns[0], columns[1], columns[3]
        if _RANGE_ID.match(token_id) or _EMPTY_NODE_ID.match(token_id):
            continue
        if not _SIMPLE_ID.match(token_id):
            raise ConllUParseError(f"malformed token id {token_id!r}", line_number, source)
        if not form:
            raise ConllUParseError("empty FORM column", line_number, source)
        if tag_inventory is not None and upos != PLACEHOLDER and upos not in tag_inventory:
            raise ConllUParseError(f"tag {upos!r} is not in the tag inventory", line_number, source)
        tokens.append(Token(form, upos))

    close()
    return sentences


def read_conllu(path: Union[str, Path], tag_inventory: Optional[FrozenSet[str]] = UPOS_TAGS) -> List[Sentence]:
    """Read a UTF-8 CoNLL-U file; undecodable bytes are a parse error."""
    path = Path(path)
    data = path.read_bytes()
    try:
        text = data.decode('utf-8')
    except UnicodeDecodeError as e:
        line_number = data.count(b'\n', 0, e.start) + 1
        raise ConllUParseError(f"invalid UTF-8 byte sequence ({e.reason})", line_number, str(path)) from e
    return parse_conllu(text, tag_inventory=tag_inventory, source=str(path))


def to_conllu(sentences: Iterable[Sentence]) -> str:
    """Serialize sentences to minimal CoNLL-U (ID, FORM, UPOS; other columns "_")."""
    out: List[str] = []
    for sentence in sentences:
        if sentence.source_id is not None:
            out.append(f"# sent_id = {sentence.source_id}")
        for i, token in enumerate(sentence.tokens, start=1):
            out.append('\t'.join([str(i), token.form, '_', token.tag, '_', '_', '_', '_', '_', '_']))
        out.append('')
    return '\n'.join(out) + ('\n' if out else '')


def curate(sentences: Iterable[Sentence], options: Optional[CurationOptions] = None) -> List[Sentence]:
    """Drop placeholder-tagged tokens and empty sentences; optionally force a final full stop."""
    options = options or CurationOptions()
    curated: List[Sentence] = []
    for sentence in sentences:
        tokens = [token for token in sentence.tokens if token.tag != PLACEHOLDER]
        if not tokens:
            continue
        if options.svmtool_compat and tokens[-1].form != options.full_stop_form:
            tokens.append(Token(options.full_stop_form, options.full_stop_tag))
        curated.append(Sentence(tuple(tokens), sentence.source_id))
    return curated


def write_curated(sentences: Iterable[Sentence], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for sentence in sentences:
            for token in sentence.tokens:
                f.write(f"{token.form}\t{token.tag}\n")
            f.write('\n')
    return path


def read_curated(path: Union[str, Path]) -> List[Sentence]:
    sentences: List[Sentence] = []
    pairs: List[Tuple[str, str]] = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, raw in enumerate(f, start=1):
            line = raw.rstrip('\r\n')
            if not line:
                if pairs:
                    sentences.append(Sentence.from_pairs(pairs))
                pairs = []
                continue
            form, sep, tag = line.partition('\t')
            if not sep or not form or not tag:
                raise ConllUParseError("expected 'form<TAB>tag'", line_number, str(path))
            pairs.append((form, tag))
    if pairs:
        sentences.append(Sentence.from_pairs(pairs))
    return sentences


def _find_split_file(directory: Path, split: str) -> Optional[Path]:
    matches = sorted(directory.glob(f"*-ud-{split}.conllu"))
    if not matches:
        matches = sorted(directory.glob(f"*{split}*.conllu"))
    if len(matches) > 1:
        raise TreebankLoadError(f"ambiguous split: {split} ({', '.join(m.name for m in matches)})")
    return matches[0] if matches else None


def _treebank_name(path: Path) -> str:
    # en_gum-ud-train.conllu -> GUM
    stem = path.name.split('-ud-')[0]
    return stem.split('_', 1)[1].upper() if '_' in stem else stem.upper()


def load_treebank(
    directory: Union[str, Path],
    language: str,
    options: Optional[CurationOptions] = None,
    tag_inventory: Optional[FrozenSet[str]] = UPOS_TAGS,
) -> Treebank:
    """
    Load and curate the train/dev/test splits of one UD treebank directory.

    Raises:
        TreebankLoadError: a split file is missing or ambiguous, or the
            splits share sentence ids.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise TreebankLoadError(f"treebank directory not found: {directory}")

    files: Dict[str, Path] = {}
    for split in SPLITS:
        found = _find_split_file(directory, split)
        if found is None:
            raise TreebankLoadError(f"missing split: {split}")
        files[split] = found

    prefix = files['train'].name.split('_', 1)[0]
    if prefix != language and '-ud-' in files['train'].name:
        logger.warning(f"Treebank {directory.name} looks like language '{prefix}', loading as '{language}'")

    splits = {split: tuple(curate(read_conllu(files[split], tag_inventory), options)) for split in SPLITS}

    seen: Dict[str, str] = {}
    for split in SPLITS:
        for sentence in splits[split]:
            if sentence.source_id is None:
                continue
            other = seen.setdefault(sentence.source_id, split)
            if other != split:
                raise TreebankLoadError(
                    f"sentence id {sentence.source_id!r} appears in both {other} and {split}"
                )

    treebank = Treebank(
        language=language,
        name=_treebank_name(files['train']),
        train=splits['train'],
        dev=splits['dev'],
        test=splits['test'],
        files=files,
    )
    for split, stats in treebank.statistics().items():
        logger.info(
            f"{language}/{treebank.name} {split}: {stats.sentences} sentences, "
            f"{stats.tokens} tokens ({stats.token_share:.0%})"
        )
    return treebank
