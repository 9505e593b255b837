"""Most-frequent-tag baseline; also the initial annotator of the Brill tagger."""

from collections import Counter, defaultdict
from typing import Dict, List, Sequence

from loguru import logger

from ..corpus import Sentence, TagSet
from ..errors import DeserializationError, TrainingError
from .base import BodyReader, TaggerModel, section


def modal_tag(counts: Counter, tagset: TagSet) -> str:
    """Most frequent tag; ties go to the lowest TagSet index."""
    return min(counts, key=lambda tag: (-counts[tag], tagset.index(tag)))


class UnigramModel(TaggerModel):
    kind = 'unigram'

    def __init__(self, language: str, tagset: TagSet, lexicon: Dict[str, str], default_tag: str):
        super().__init__(language, tagset)
        if default_tag not in tagset:
            raise ValueError(f"default tag {default_tag!r} is not in the tag set")
        self.lexicon = dict(lexicon)
        self.default_tag = default_tag

    def tag(self, forms: Sequence[str]) -> List[str]:
        return [self.lexicon.get(form, self.default_tag) for form in forms]

    def dump_body(self) -> List[str]:
        lines = [' '.join(['tagset', *self.tagset.labels]), f"default {self.default_tag}"]
        lines += section('lexicon', sorted(self.lexicon.items()))
        return lines

    @classmethod
    def load_body(cls, language: str, reader: BodyReader) -> 'UnigramModel':
        tagset = TagSet(reader.keyed('tagset'))
        default = reader.keyed('default')
        if len(default) != 1 or default[0] not in tagset:
            raise DeserializationError(f"{reader.source}: bad default tag")
        lexicon = {}
        for form, tag in reader.section('lexicon', 2):
            if tag not in tagset:
                raise DeserializationError(f"{reader.source}: lexicon tag {tag!r} not in tag set")
            lexicon[form] = tag
        return cls(language, tagset, lexicon, default[0])


def train_unigram(train: Sequence[Sentence], language: str = 'xx') -> UnigramModel:
    if not train or not any(len(sentence) for sentence in train):
        raise TrainingError('cannot train a unigram model on an empty corpus')

    tagset = TagSet.from_sentences(train)
    by_form: Dict[str, Counter] = defaultdict(Counter)
    overall: Counter = Counter()
    for sentence in train:
        for token in sentence.tokens:
            by_form[token.form][token.tag] += 1
            overall[token.tag] += 1

    lexicon = {form: modal_tag(counts, tagset) for form, counts in by_form.items()}
    model = UnigramModel(language, tagset, lexicon, modal_tag(overall, tagset))
    logger.debug(f"Unigram model: {len(lexicon)} forms, default tag {model.default_tag}")
    return model
