"""
Trigrams'n'Tags style second-order HMM tagger.

Transition model:
    P(t3 | t1, t2) = l1 P^(t3) + l2 P^(t3 | t2) + l3 P^(t3 | t1, t2)
with maximum-likelihood P^ and weights set by deleted interpolation.
Sentences are padded with two boundary symbols on the left and an
end-of-sentence symbol on the right; both share index K (= number of
tags) in the count tables, "<s>" in context positions and "</s>" in the
predicted position.

Lexical model:
    known words:   P(w | t) = f(w, t) / f(t)
    unknown words: suffix tries built from rare training words (frequency
                   <= rare_cutoff), one trie per capitalization class,
                   suffix lengths 0..suffix_length, smoothed by successive
                   abstraction with theta = standard deviation of the tag
                   unigram distribution; P(t | suffix) / P(t) is used as
                   the emission score.

Decoding is second-order Viterbi over (previous tag, tag) states with a
beam of at most `beam` states per position (None = unbounded).
"""

import math
from collections import Counter, defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..corpus import Sentence, TagSet
from ..errors import DeserializationError, TrainingError
from .base import BodyReader, TaggerModel, parse_float, parse_int, section
from .hmm import LOG_FLOOR, safe_log

DEFAULT_SUFFIX_LENGTH = 10
DEFAULT_RARE_CUTOFF = 10
DEFAULT_BEAM = 1000

BOS = '<s>'
EOS = '</s>'
UPPER = 'upper'
LOWER = 'lower'


def case_class(form: str) -> str:
    return UPPER if form[:1].isupper() else LOWER


def deleted_interpolation(unigrams: np.ndarray, bigrams: np.ndarray, trigrams: np.ndarray) -> Tuple[float, float, float]:
    """
    Set l1, l2, l3 by comparing held-one-out relative frequencies.

    Each trigram type votes with its count for the order whose estimate
    survives removing that occurrence best; ties split the vote evenly.
    """
    lambdas = [0.0, 0.0, 0.0]
    total = int(unigrams.sum())
    bigram_context = bigrams.sum(axis=1)
    trigram_context = trigrams.sum(axis=2)

    for a, b, c in zip(*np.nonzero(trigrams)):
        f3 = int(trigrams[a, b, c])
        ctx3 = int(trigram_context[a, b])
        ctx2 = int(bigram_context[b])
        estimates = (
            (int(unigrams[c]) - 1) / (total - 1) if total > 1 else 0.0,
            (int(bigrams[b, c]) - 1) / (ctx2 - 1) if ctx2 > 1 else 0.0,
            (f3 - 1) / (ctx3 - 1) if ctx3 > 1 else 0.0,
        )
        best = max(estimates)
        winners = [i for i, value in enumerate(estimates) if value == best]
        for i in winners:
            lambdas[i] += f3 / len(winners)

    norm = sum(lambdas)
    if norm == 0:
        return (1.0, 0.0, 0.0)
    return (lambdas[0] / norm, lambdas[1] / norm, lambdas[2] / norm)


class TnTModel(TaggerModel):
    kind = 'tnt'

    def __init__(
        self,
        language: str,
        tagset: TagSet,
        unigrams: np.ndarray,
        bigrams: np.ndarray,
        trigrams: np.ndarray,
        lexicon: Dict[str, Dict[str, int]],
        suffixes: Dict[str, Dict[str, Dict[str, int]]],
        lambdas: Tuple[float, float, float],
        suffix_length: int = DEFAULT_SUFFIX_LENGTH,
        rare_cutoff: int = DEFAULT_RARE_CUTOFF,
        beam: Optional[int] = DEFAULT_BEAM,
    ):
        super().__init__(language, tagset)
        k = len(tagset)
        self.boundary = k
        self.unigrams = np.asarray(unigrams, dtype=np.int64).reshape(k + 1)
        self.bigrams = np.asarray(bigrams, dtype=np.int64).reshape(k + 1, k + 1)
        self.trigrams = np.asarray(trigrams, dtype=np.int64).reshape(k + 1, k + 1, k + 1)
        self.lexicon = {form: dict(counts) for form, counts in lexicon.items()}
        self.suffixes = {case: {suf: dict(c) for suf, c in tries.items()} for case, tries in suffixes.items()}
        self.lambdas = tuple(float(x) for x in lambdas)
        self.suffix_length = int(suffix_length)
        self.rare_cutoff = int(rare_cutoff)
        self.beam = beam if beam is None else int(beam)

        p1 = self.unigrams / max(int(self.unigrams.sum()), 1)
        p2 = _conditional(self.bigrams)
        p3 = _conditional(self.trigrams)
        l1, l2, l3 = self.lambdas
        self.transition = l1 * p1[None, None, :] + l2 * p2[None, :, :] + l3 * p3
        self.log_transition = safe_log(self.transition)

        tag_counts = self.unigrams[:k].astype(np.float64)
        self.tag_prior = tag_counts / max(tag_counts.sum(), 1.0)
        self.theta = float(np.std(self.tag_prior, ddof=1)) if k > 1 else 0.0
        self._suffix_cache: Dict[Tuple[str, str], np.ndarray] = {}

    def emission_scores(self, form: str) -> np.ndarray:
        """Log emission score of `form` for every tag."""
        k = self.boundary
        counts = self.lexicon.get(form)
        if counts is not None:
            scores = np.zeros(k)
            for tag, count in counts.items():
                scores[self.tagset.index(tag)] = count
            return safe_log(scores / np.maximum(self.unigrams[:k], 1))
        distribution = self.suffix_distribution(form)
        return safe_log(distribution / np.where(self.tag_prior > 0, self.tag_prior, 1.0))

    def suffix_distribution(self, form: str) -> np.ndarray:
        """P(t | longest known suffix of form), smoothed by successive abstraction."""
        case = case_class(form)
        for trie_case in (case, LOWER if case == UPPER else UPPER):
            trie = self.suffixes.get(trie_case)
            if not trie:
                continue
            for length in range(min(self.suffix_length, len(form)), -1, -1):
                suffix = form[len(form) - length:]
                if suffix in trie:
                    return self._abstracted(trie_case, suffix)
        return self.tag_prior

    def _abstracted(self, case: str, suffix: str) -> np.ndarray:
        key = (case, suffix)
        cached = self._suffix_cache.get(key)
        if cached is not None:
            return cached
        trie = self.suffixes[case]
        mle = np.zeros(self.boundary)
        for tag, count in trie[suffix].items():
            mle[self.tagset.index(tag)] = count
        mle /= mle.sum()
        if not suffix:
            distribution = mle
        else:
            shorter = suffix[1:]
            parent = self._abstracted(case, shorter) if shorter in trie else self.tag_prior
            distribution = (mle + self.theta * parent) / (1.0 + self.theta)
        self._suffix_cache[key] = distribution
        return distribution

    def tag(self, forms: Sequence[str]) -> List[str]:
        return tnt_tag(self, forms)

    def dump_body(self) -> List[str]:
        labels = self.tagset.labels
        k = self.boundary

        def context(i: int) -> str:
            return BOS if i == k else labels[i]

        def predicted(i: int) -> str:
            return EOS if i == k else labels[i]

        lines = [
            ' '.join(['tagset', *labels]),
            f"params {self.suffix_length} {self.rare_cutoff} {'none' if self.beam is None else self.beam}",
            'lambdas ' + ' '.join(repr(x) for x in self.lambdas),
        ]
        lines += section('unigrams', [(predicted(c), int(self.unigrams[c])) for c in np.nonzero(self.unigrams)[0]])
        lines += section('bigrams', [
            (context(b), predicted(c), int(self.bigrams[b, c])) for b, c in zip(*np.nonzero(self.bigrams))
        ])
        lines += section('trigrams', [
            (context(a), context(b), predicted(c), int(self.trigrams[a, b, c]))
            for a, b, c in zip(*np.nonzero(self.trigrams))
        ])
        lines += section('lexicon', [
            (form, tag, count)
            for form in sorted(self.lexicon)
            for tag, count in sorted(self.lexicon[form].items())
        ])
        lines += section('suffixes', [
            (case, suffix, tag, count)
            for case in sorted(self.suffixes)
            for suffix in sorted(self.suffixes[case])
            for tag, count in sorted(self.suffixes[case][suffix].items())
        ])
        return lines

    @classmethod
    def load_body(cls, language: str, reader: BodyReader) -> 'TnTModel':
        tagset = TagSet(reader.keyed('tagset'))
        k = len(tagset)
        params = reader.keyed('params')
        if len(params) != 3:
            raise DeserializationError(f"{reader.source}: bad params line")
        suffix_length = parse_int(params[0], reader)
        rare_cutoff = parse_int(params[1], reader)
        beam = None if params[2] == 'none' else parse_int(params[2], reader)
        lambda_values = reader.keyed('lambdas')
        if len(lambda_values) != 3:
            raise DeserializationError(f"{reader.source}: expected three interpolation weights")
        lambdas = tuple(parse_float(x, reader) for x in lambda_values)

        def index(label: str, boundary_name: str) -> int:
            if label == boundary_name:
                return k
            if label not in tagset:
                raise DeserializationError(f"{reader.source}: unknown tag {label!r}")
            return tagset.index(label)

        unigrams = np.zeros(k + 1, dtype=np.int64)
        for c, count in reader.section('unigrams', 2):
            unigrams[index(c, EOS)] = parse_int(count, reader)
        bigrams = np.zeros((k + 1, k + 1), dtype=np.int64)
        for b, c, count in reader.section('bigrams', 3):
            bigrams[index(b, BOS), index(c, EOS)] = parse_int(count, reader)
        trigrams = np.zeros((k + 1, k + 1, k + 1), dtype=np.int64)
        for a, b, c, count in reader.section('trigrams', 4):
            trigrams[index(a, BOS), index(b, BOS), index(c, EOS)] = parse_int(count, reader)
        lexicon: Dict[str, Dict[str, int]] = defaultdict(dict)
        for form, tag, count in reader.section('lexicon', 3):
            index(tag, '')
            lexicon[form][tag] = parse_int(count, reader)
        suffixes: Dict[str, Dict[str, Dict[str, int]]] = defaultdict(lambda: defaultdict(dict))
        for case, suffix, tag, count in reader.section('suffixes', 4):
            if case not in (UPPER, LOWER):
                raise DeserializationError(f"{reader.source}: unknown capitalization class {case!r}")
            index(tag, '')
            suffixes[case][suffix][tag] = parse_int(count, reader)
        return cls(
            language, tagset, unigrams, bigrams, trigrams, lexicon, suffixes, lambdas,
            suffix_length=suffix_length, rare_cutoff=rare_cutoff, beam=beam,
        )


def _conditional(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=-1, keepdims=True)
    with np.errstate(invalid='ignore', divide='ignore'):
        probs = counts / totals
    return np.where(totals > 0, probs, 0.0)


def tnt_train(
    train: Sequence[Sentence],
    language: str = 'xx',
    suffix_length: int = DEFAULT_SUFFIX_LENGTH,
    rare_cutoff: int = DEFAULT_RARE_CUTOFF,
    beam: Optional[int] = DEFAULT_BEAM,
) -> TnTModel:
    if not train or not any(len(sentence) for sentence in train):
        raise TrainingError('cannot train TnT on an empty corpus')
    if suffix_length < 0 or rare_cutoff < 0:
        raise TrainingError('suffix length and rare-word cutoff must be >= 0')
    if beam is not None and beam < 1:
        raise TrainingError(f"beam width must be >= 1, got {beam}")

    tagset = TagSet.from_sentences(train)
    k = len(tagset)
    unigrams = np.zeros(k + 1, dtype=np.int64)
    bigrams = np.zeros((k + 1, k + 1), dtype=np.int64)
    trigrams = np.zeros((k + 1, k + 1, k + 1), dtype=np.int64)
    lexicon: Dict[str, Counter] = defaultdict(Counter)

    for sentence in train:
        if not len(sentence):
            continue
        symbols = [k, k] + [tagset.index(tag) for tag in sentence.tags] + [k]
        for a, b, c in zip(symbols, symbols[1:], symbols[2:]):
            unigrams[c] += 1
            bigrams[b, c] += 1
            trigrams[a, b, c] += 1
        for token in sentence.tokens:
            lexicon[token.form][token.tag] += 1

    form_frequency = {form: sum(counts.values()) for form, counts in lexicon.items()}
    suffixes: Dict[str, Dict[str, Counter]] = defaultdict(lambda: defaultdict(Counter))
    for form, counts in lexicon.items():
        if form_frequency[form] > rare_cutoff:
            continue
        trie = suffixes[case_class(form)]
        for length in range(0, min(suffix_length, len(form)) + 1):
            suffix = form[len(form) - length:]
            for tag, count in counts.items():
                trie[suffix][tag] += count

    lambdas = deleted_interpolation(unigrams, bigrams, trigrams)
    logger.debug(
        f"TnT: {k} tags, {len(lexicon)} forms, "
        f"{sum(len(t) for t in suffixes.values())} suffixes, "
        f"lambdas={tuple(round(x, 4) for x in lambdas)}"
    )
    return TnTModel(
        language, tagset, unigrams, bigrams, trigrams, lexicon, suffixes, lambdas,
        suffix_length=suffix_length, rare_cutoff=rare_cutoff, beam=beam,
    )


def tnt_tag(model: TnTModel, forms: Sequence[str], beam: Optional[int] = -1) -> List[str]:
    """
    Second-order Viterbi with beam pruning.

    `beam` overrides the model's beam width when given (None = unbounded).
    Ties prefer the lowest tag index, latest position first.
    """
    if not forms:
        return []
    width = model.beam if beam == -1 else beam
    k = model.boundary
    log_transition = model.log_transition

    # states are (previous tag, tag); row/column k is the boundary symbol
    scores = np.full((k + 1, k + 1), -np.inf)
    scores[k, k] = 0.0
    backpointers = []
    for form in forms:
        candidates = scores[:, :, None] + log_transition[:, :, :k]
        best_first = np.argmax(candidates, axis=0)
        best = np.take_along_axis(candidates, best_first[None, :, :], axis=0)[0]
        scores = np.full((k + 1, k + 1), -np.inf)
        scores[:, :k] = best + model.emission_scores(form)[None, :]
        backpointers.append(best_first)
        if width is not None:
            flat = scores.ravel()
            alive = np.count_nonzero(np.isfinite(flat))
            if alive > width:
                order = np.argsort(-flat, kind='stable')
                flat[order[width:]] = -np.inf

    final = scores + log_transition[:, :, k]
    state = int(np.argmax(final.T.ravel()))
    last, previous = divmod(state, k + 1)

    n = len(forms)
    path = [0] * n
    path[n - 1] = last
    if n > 1:
        path[n - 2] = previous
    for i in range(n - 1, 1, -1):
        path[i - 2] = int(backpointers[i][path[i - 1], path[i]])
    return [model.tagset.label(t) for t in path]
