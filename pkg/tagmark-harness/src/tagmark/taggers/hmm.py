"""
First-order hidden Markov model tagger.

Parameters are maximum-likelihood estimates with add-alpha smoothing on
the initial, transition and emission distributions. Words never seen in
training emit through a single UNK symbol whose per-tag counts are the
hapax legomena of the training data.

Decoding is Viterbi in log space; zero-probability events score
LOG_FLOOR instead of -inf, and ties always go to the lowest tag index.
"""

from collections import Counter
from typing import Dict, List, Sequence

import numpy as np
from loguru import logger

from ..corpus import Sentence, TagSet
from ..errors import DeserializationError, TrainingError
from .base import BodyReader, TaggerModel, parse_float, parse_int, section

LOG_FLOOR = -1e9
DEFAULT_ALPHA = 0.001


def safe_log(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide='ignore'):
        logs = np.log(values)
    return np.where(values > 0, logs, LOG_FLOOR)


def _normalize_rows(counts: np.ndarray, alpha: float) -> np.ndarray:
    """Add-alpha row normalization; rows with no mass become uniform."""
    smoothed = counts.astype(np.float64) + alpha
    totals = smoothed.sum(axis=-1, keepdims=True)
    uniform = np.full_like(smoothed, 1.0 / smoothed.shape[-1])
    with np.errstate(invalid='ignore', divide='ignore'):
        probs = smoothed / totals
    return np.where(totals > 0, probs, uniform)


class HmmModel(TaggerModel):
    kind = 'hmm'

    def __init__(
        self,
        language: str,
        tagset: TagSet,
        vocabulary: Sequence[str],
        initial_counts: np.ndarray,
        transition_counts: np.ndarray,
        emission_counts: np.ndarray,
        unknown_counts: np.ndarray,
        alpha: float = DEFAULT_ALPHA,
    ):
        super().__init__(language, tagset)
        n_tags = len(tagset)
        self.vocabulary = list(vocabulary)
        self.word_index: Dict[str, int] = {form: i for i, form in enumerate(self.vocabulary)}
        self.alpha = float(alpha)
        self.initial_counts = np.asarray(initial_counts, dtype=np.int64).reshape(n_tags)
        self.transition_counts = np.asarray(transition_counts, dtype=np.int64).reshape(n_tags, n_tags)
        self.emission_counts = np.asarray(emission_counts, dtype=np.int64).reshape(n_tags, len(self.vocabulary))
        self.unknown_counts = np.asarray(unknown_counts, dtype=np.int64).reshape(n_tags)

        self.initial = _normalize_rows(self.initial_counts, self.alpha)
        self.transition = _normalize_rows(self.transition_counts, self.alpha)
        # last column is the UNK symbol
        self.emission = _normalize_rows(
            np.concatenate([self.emission_counts, self.unknown_counts[:, None]], axis=1), self.alpha
        )
        self.log_initial = safe_log(self.initial)
        self.log_transition = safe_log(self.transition)
        self.log_emission = safe_log(self.emission)

    @property
    def unk_index(self) -> int:
        return len(self.vocabulary)

    def observation(self, form: str) -> int:
        return self.word_index.get(form, self.unk_index)

    def tag(self, forms: Sequence[str]) -> List[str]:
        return hmm_tag(self, forms)

    def dump_body(self) -> List[str]:
        labels = self.tagset.labels
        lines = [' '.join(['tagset', *labels]), f"alpha {self.alpha!r}"]
        lines += section('initial', [
            (labels[t], int(c)) for t, c in enumerate(self.initial_counts) if c
        ])
        lines += section('transitions', [
            (labels[a], labels[b], int(self.transition_counts[a, b]))
            for a, b in zip(*np.nonzero(self.transition_counts))
        ])
        words, tags = np.nonzero(self.emission_counts.T)
        lines += section('emissions', [
            (self.vocabulary[w], labels[t], int(self.emission_counts[t, w])) for w, t in zip(words, tags)
        ])
        lines += section('unknown', [
            (labels[t], int(c)) for t, c in enumerate(self.unknown_counts) if c
        ])
        return lines

    @classmethod
    def load_body(cls, language: str, reader: BodyReader) -> 'HmmModel':
        tagset = TagSet(reader.keyed('tagset'))
        alpha = parse_float(reader.keyed('alpha')[0], reader)
        n_tags = len(tagset)

        def tag_index(label: str) -> int:
            if label not in tagset:
                raise DeserializationError(f"{reader.source}: unknown tag {label!r}")
            return tagset.index(label)

        initial = np.zeros(n_tags, dtype=np.int64)
        for label, count in reader.section('initial', 2):
            initial[tag_index(label)] = parse_int(count, reader)
        transitions = np.zeros((n_tags, n_tags), dtype=np.int64)
        for prev, label, count in reader.section('transitions', 3):
            transitions[tag_index(prev), tag_index(label)] = parse_int(count, reader)
        records = list(reader.section('emissions', 3))
        vocabulary = sorted({form for form, _, _ in records})
        word_index = {form: i for i, form in enumerate(vocabulary)}
        emissions = np.zeros((n_tags, len(vocabulary)), dtype=np.int64)
        for form, label, count in records:
            emissions[tag_index(label), word_index[form]] = parse_int(count, reader)
        unknown = np.zeros(n_tags, dtype=np.int64)
        for label, count in reader.section('unknown', 2):
            unknown[tag_index(label)] = parse_int(count, reader)
        return cls(language, tagset, vocabulary, initial, transitions, emissions, unknown, alpha)


def hmm_train(train: Sequence[Sentence], language: str = 'xx', alpha: float = DEFAULT_ALPHA) -> HmmModel:
    """Count initial tags, tag bigrams, and (tag, form) pairs; hapaxes feed UNK."""
    if not train or not any(len(sentence) for sentence in train):
        raise TrainingError('cannot train an HMM on an empty corpus')
    if alpha < 0:
        raise TrainingError(f"smoothing constant must be >= 0, got {alpha}")

    tagset = TagSet.from_sentences(train)
    n_tags = len(tagset)
    form_counts = Counter(token.form for sentence in train for token in sentence.tokens)
    vocabulary = sorted(form_counts)
    word_index = {form: i for i, form in enumerate(vocabulary)}

    initial = np.zeros(n_tags, dtype=np.int64)
    transitions = np.zeros((n_tags, n_tags), dtype=np.int64)
    emissions = np.zeros((n_tags, len(vocabulary)), dtype=np.int64)
    unknown = np.zeros(n_tags, dtype=np.int64)

    for sentence in train:
        previous = None
        for token in sentence.tokens:
            t = tagset.index(token.tag)
            if previous is None:
                initial[t] += 1
            else:
                transitions[previous, t] += 1
            emissions[t, word_index[token.form]] += 1
            if form_counts[token.form] == 1:
                unknown[t] += 1
            previous = t

    logger.debug(
        f"HMM: {n_tags} tags, {len(vocabulary)} forms, {int(unknown.sum())} hapax tokens, alpha={alpha}"
    )
    return HmmModel(language, tagset, vocabulary, initial, transitions, emissions, unknown, alpha)


def hmm_tag(model: HmmModel, forms: Sequence[str]) -> List[str]:
    """Log-space Viterbi; backpointers and the final state prefer the lowest tag index."""
    if not forms:
        return []
    observations = [model.observation(form) for form in forms]
    emission = model.log_emission

    delta = model.log_initial + emission[:, observations[0]]
    backpointers = []
    for obs in observations[1:]:
        scores = delta[:, None] + model.log_transition
        best_prev = np.argmax(scores, axis=0)
        delta = scores[best_prev, np.arange(scores.shape[1])] + emission[:, obs]
        backpointers.append(best_prev)

    state = int(np.argmax(delta))
    path = [state]
    for best_prev in reversed(backpointers):
        state = int(best_prev[state])
        path.append(state)
    path.reverse()
    return [model.tagset.label(t) for t in path]
