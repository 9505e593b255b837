"""
Transformation-based (Brill) tagger.

A unigram annotator produces the initial tags; an ordered list of rules
then rewrites them. A rule reads "change from_tag to to_tag when
<template>(args) holds at this position". Triggers are evaluated on the
sentence as it was before the rule's pass, then every firing position
changes at once.
"""

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from loguru import logger

from ..corpus import Sentence, TagSet
from ..errors import DeserializationError, TrainingError
from .base import BodyReader, TaggerModel, parse_int, section
from .unigram import UnigramModel, train_unigram

DEFAULT_THRESHOLD = 2
DEFAULT_MAX_RULES = 500

# (name, arity); the lexical templates come last
TEMPLATES: Tuple[Tuple[str, int], ...] = (
    ('PREVTAG', 1),
    ('NEXTTAG', 1),
    ('PREV2TAG', 1),
    ('NEXT2TAG', 1),
    ('PREV1OR2TAG', 1),
    ('NEXT1OR2TAG', 1),
    ('PREV1OR2OR3TAG', 1),
    ('NEXT1OR2OR3TAG', 1),
    ('SURROUNDTAG', 2),
    ('PREVBIGRAM', 2),
    ('NEXTBIGRAM', 2),
    ('PREVWD', 1),
    ('NEXTWD', 1),
)
TEMPLATE_INDEX = {name: i for i, (name, _) in enumerate(TEMPLATES)}
WINDOW = 3


@dataclass(frozen=True)
class BrillRule:
    template: str
    args: Tuple[str, ...]
    from_tag: str
    to_tag: str
    gain: int = 0

    def __post_init__(self):
        if self.template not in TEMPLATE_INDEX:
            raise ValueError(f"unknown Brill template {self.template!r}")
        if len(self.args) != TEMPLATES[TEMPLATE_INDEX[self.template]][1]:
            raise ValueError(f"{self.template} takes {TEMPLATES[TEMPLATE_INDEX[self.template]][1]} argument(s)")
        if self.from_tag == self.to_tag:
            raise ValueError(f"rule rewrites {self.from_tag} to itself")

    def __str__(self) -> str:
        return f"{self.from_tag}->{self.to_tag} if {self.template}({', '.join(self.args)})"


def template_args(template: int, words: Sequence[str], tags: Sequence[str], i: int) -> List[Tuple[str, ...]]:
    """Argument tuples under which `template` fires at position i; out-of-bounds never fires."""
    n = len(tags)

    def tag_at(offset: int) -> Optional[str]:
        j = i + offset
        return tags[j] if 0 <= j < n else None

    def both(a: int, b: int) -> List[Tuple[str, ...]]:
        x, y = tag_at(a), tag_at(b)
        return [(x, y)] if x is not None and y is not None else []

    def any_of(*offsets: int) -> List[Tuple[str, ...]]:
        seen = []
        for offset in offsets:
            t = tag_at(offset)
            if t is not None and (t,) not in seen:
                seen.append((t,))
        return seen

    if template <= 3:
        t = tag_at((-1, 1, -2, 2)[template])
        return [(t,)] if t is not None else []
    if template == 4:
        return any_of(-1, -2)
    if template == 5:
        return any_of(1, 2)
    if template == 6:
        return any_of(-1, -2, -3)
    if template == 7:
        return any_of(1, 2, 3)
    if template == 8:
        return both(-1, 1)
    if template == 9:
        return both(-2, -1)
    if template == 10:
        return both(1, 2)
    j = i - 1 if template == 11 else i + 1
    return [(words[j],)] if 0 <= j < n else []


def instantiations(words: Sequence[str], tags: Sequence[str], i: int) -> Iterator[Tuple[int, Tuple[str, ...]]]:
    for template in range(len(TEMPLATES)):
        for args in template_args(template, words, tags, i):
            yield template, args


def apply_rule(rule: BrillRule, words: Sequence[str], tags: List[str]) -> List[int]:
    """Apply one rule to a sentence in place; returns the changed positions."""
    template = TEMPLATE_INDEX[rule.template]
    fired = [
        i for i, tag in enumerate(tags)
        if tag == rule.from_tag and rule.args in template_args(template, words, tags, i)
    ]
    for i in fired:
        tags[i] = rule.to_tag
    return fired


class BrillModel(TaggerModel):
    kind = 'brill'

    def __init__(self, language: str, initial: UnigramModel, rules: Sequence[BrillRule]):
        super().__init__(language, initial.tagset)
        for rule in rules:
            for tag in (rule.from_tag, rule.to_tag):
                if tag not in initial.tagset:
                    raise ValueError(f"rule tag {tag!r} is not in the tag set")
        self.initial = initial
        self.rules = list(rules)

    def tag(self, forms: Sequence[str]) -> List[str]:
        return brill_apply(self, forms)

    def dump_body(self) -> List[str]:
        lines = self.initial.dump_body()
        lines += section('rules', [
            (rule.template, rule.args[0], rule.args[1] if len(rule.args) > 1 else '', rule.from_tag, rule.to_tag, rule.gain)
            for rule in self.rules
        ])
        return lines

    @classmethod
    def load_body(cls, language: str, reader: BodyReader) -> 'BrillModel':
        initial = UnigramModel.load_body(language, reader)
        rules = []
        for template, first, second, from_tag, to_tag, gain in reader.section('rules', 6):
            if template not in TEMPLATE_INDEX:
                raise DeserializationError(f"{reader.source}: unknown rule template {template!r}")
            args = (first,) if TEMPLATES[TEMPLATE_INDEX[template]][1] == 1 else (first, second)
            try:
                rules.append(BrillRule(template, args, from_tag, to_tag, parse_int(gain, reader)))
            except ValueError as e:
                raise DeserializationError(f"{reader.source}: {e}") from None
        try:
            return cls(language, initial, rules)
        except ValueError as e:
            raise DeserializationError(f"{reader.source}: {e}") from None


def brill_apply(model: BrillModel, forms: Sequence[str]) -> List[str]:
    tags = model.initial.tag(forms)
    for rule in model.rules:
        apply_rule(rule, forms, tags)
    return tags


class _RuleScores:
    """
    Incremental rule statistics over the current annotation.

    fixes[(template, args, from, to)]: positions tagged `from`, gold `to`, trigger matching.
    breaks[(template, args, from)]: positions tagged `from` correctly, trigger matching.
    gain = fixes - breaks.
    """

    def __init__(self):
        self.fixes: Counter = Counter()
        self.breaks: Counter = Counter()

    def update(self, words: Sequence[str], tags: Sequence[str], gold: Sequence[str], i: int, sign: int):
        current = tags[i]
        if current == gold[i]:
            for template, args in instantiations(words, tags, i):
                key = (template, args, current)
                self.breaks[key] += sign
                if not self.breaks[key]:
                    del self.breaks[key]
        else:
            for template, args in instantiations(words, tags, i):
                key = (template, args, current, gold[i])
                self.fixes[key] += sign
                if not self.fixes[key]:
                    del self.fixes[key]

    def best(self, tagset: TagSet) -> Optional[Tuple[int, Tuple]]:
        """Highest-gain rule; ties go to lower from/to tag index, then template index, then args."""
        best_key = None
        best_rank = None
        for key, fixed in self.fixes.items():
            template, args, from_tag, to_tag = key
            gain = fixed - self.breaks.get((template, args, from_tag), 0)
            rank = (-gain, tagset.index(from_tag), tagset.index(to_tag), template, args)
            if best_rank is None or rank < best_rank:
                best_rank, best_key = rank, key
        if best_key is None:
            return None
        return -best_rank[0], best_key


def brill_train(
    train: Sequence[Sentence],
    language: str = 'xx',
    threshold: int = DEFAULT_THRESHOLD,
    max_rules: int = DEFAULT_MAX_RULES,
) -> BrillModel:
    """Greedy TBL: repeatedly take the rule with the largest net error reduction."""
    if threshold < 1:
        raise TrainingError(f"rule gain threshold must be >= 1, got {threshold}")
    if max_rules < 0:
        raise TrainingError(f"max_rules must be >= 0, got {max_rules}")
    initial = train_unigram(train, language)
    tagset = initial.tagset

    corpus = [(sentence.forms, initial.tag(sentence.forms), sentence.tags) for sentence in train if len(sentence)]
    scores = _RuleScores()
    for words, tags, gold in corpus:
        for i in range(len(words)):
            scores.update(words, tags, gold, i, +1)

    rules: List[BrillRule] = []
    while len(rules) < max_rules:
        found = scores.best(tagset)
        if found is None or found[0] < threshold:
            break
        gain, (template, args, from_tag, to_tag) = found
        rule = BrillRule(TEMPLATES[template][0], args, from_tag, to_tag, gain)
        for words, tags, gold in corpus:
            if from_tag not in tags:
                continue
            before = list(tags)
            fired = apply_rule(rule, words, before)
            if not fired:
                continue
            affected = sorted({
                j for i in fired for j in range(max(0, i - WINDOW), min(len(words), i + WINDOW + 1))
            })
            for j in affected:
                scores.update(words, tags, gold, j, -1)
            tags[:] = before
            for j in affected:
                scores.update(words, tags, gold, j, +1)
        rules.append(rule)
        logger.debug(f"Brill rule {len(rules)}: {rule} (gain {gain})")

    logger.info(f"Brill: learned {len(rules)} rules (threshold {threshold}, max {max_rules})")
    return BrillModel(language, initial, rules)


def training_errors(model: BrillModel, train: Sequence[Sentence]) -> List[int]:
    """Token errors on `train` after 0, 1, ..., len(rules) rules."""
    states = [(s.forms, model.initial.tag(s.forms), s.tags) for s in train if len(s)]
    errors = [sum(p != g for _, tags, gold in states for p, g in zip(tags, gold))]
    for rule in model.rules:
        for words, tags, _ in states:
            apply_rule(rule, words, tags)
        errors.append(sum(p != g for _, tags, gold in states for p, g in zip(tags, gold)))
    return errors


def tune_on_dev(model: BrillModel, dev: Sequence[Sentence]) -> BrillModel:
    """Keep the rule prefix with the fewest dev errors; the shortest prefix wins ties."""
    if not dev or not model.rules:
        return model
    errors = training_errors(model, dev)
    keep = min(range(len(errors)), key=lambda k: (errors[k], k))
    if keep < len(model.rules):
        logger.info(f"Brill: dev tuning keeps {keep} of {len(model.rules)} rules")
    return BrillModel(model.language, model.initial, model.rules[:keep])
