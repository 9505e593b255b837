"""
Tagger registry: the built-in trainers and model classes, and the
generic deserializer that dispatches on an artifact's header.
"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Protocol, Sequence, Type, Union, runtime_checkable

from loguru import logger

from ..corpus import Sentence
from ..errors import DeserializationError, TrainingError
from .base import FOOTER, HEADER_MAGIC, BodyReader, ProcessSpec, TaggerModel
from .brill import BrillModel, BrillRule, brill_apply, brill_train, tune_on_dev
from .external import ExternalTagger, external_tag
from .hmm import HmmModel, hmm_tag, hmm_train
from .tnt import TnTModel, tnt_tag, tnt_train
from .unigram import UnigramModel, train_unigram


@runtime_checkable
class Tagger(Protocol):
    """What the harness needs from anything it evaluates."""

    def tag_sentences(self, sentences: Sequence[Sequence[str]]) -> List[List[str]]: ...

    def artifact_files(self) -> List[Path]: ...

    def inference_process(self, input_path: Path) -> ProcessSpec: ...


MODEL_CLASSES: Dict[str, Type[TaggerModel]] = {
    cls.kind: cls for cls in (UnigramModel, HmmModel, TnTModel, BrillModel)
}
BUILTIN_KINDS = tuple(sorted(MODEL_CLASSES))

# accepted training parameters per kind
BUILTIN_PARAMS: Dict[str, Sequence[str]] = {
    'unigram': (),
    'hmm': ('alpha',),
    'tnt': ('suffix_length', 'rare_cutoff', 'beam', 'check_beam_on_dev'),
    'brill': ('threshold', 'max_rules', 'tune_on_dev'),
}


def _train_tnt(train, dev, language, params):
    options = {k: v for k, v in params.items() if k != 'check_beam_on_dev'}
    model = tnt_train(train, language, **options)
    if params.get('check_beam_on_dev') and dev:
        check_beam_on_dev(model, dev)
    return model


def _train_brill(train, dev, language, params):
    options = {k: v for k, v in params.items() if k != 'tune_on_dev'}
    model = brill_train(train, language, **options)
    if params.get('tune_on_dev') and dev:
        model = tune_on_dev(model, dev)
    return model


TRAINERS: Dict[str, Callable[..., TaggerModel]] = {
    'unigram': lambda train, dev, language, params: train_unigram(train, language),
    'hmm': lambda train, dev, language, params: hmm_train(train, language, **params),
    'tnt': _train_tnt,
    'brill': _train_brill,
}


def train_builtin(
    kind: str,
    train: Sequence[Sentence],
    dev: Optional[Sequence[Sentence]] = None,
    language: str = 'xx',
    params: Optional[Mapping[str, Any]] = None,
) -> TaggerModel:
    if kind not in TRAINERS:
        raise TrainingError(f"unknown built-in tagger {kind!r}; expected one of {', '.join(BUILTIN_KINDS)}")
    params = dict(params or {})
    unknown = sorted(set(params) - set(BUILTIN_PARAMS[kind]))
    if unknown:
        raise TrainingError(f"{kind} does not accept parameter(s): {', '.join(unknown)}")
    logger.info(f"Training {kind} on {len(train)} sentences ({language})")
    return TRAINERS[kind](train, dev, language, params)


def check_beam_on_dev(model: TnTModel, dev: Sequence[Sentence]) -> bool:
    """True when the configured beam tags dev exactly like an unbounded beam."""
    if model.beam is None:
        return True
    differing = sum(
        tnt_tag(model, s.forms) != tnt_tag(model, s.forms, beam=None) for s in dev if len(s)
    )
    if differing:
        logger.warning(f"TnT beam {model.beam} changes the output of {differing} dev sentences")
    return differing == 0


def deserialize(files: Sequence[Union[str, Path]]) -> TaggerModel:
    """Rebuild a model from the artifact written by TaggerModel.serialize()."""
    if len(files) != 1:
        raise DeserializationError(f"built-in models have exactly one artifact file, got {len(files)}")
    path = Path(files[0])
    try:
        text = path.read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise DeserializationError(f"{path}: {e}") from e
    if not text.endswith('\n'):
        raise DeserializationError(f"{path}: truncated model file (no final newline)")
    lines = text[:-1].split('\n')

    header = lines[0].split(' ')
    if len(header) != 4 or header[0] != HEADER_MAGIC:
        raise DeserializationError(f"{path}: not a tagmark model file")
    _, kind, version, language = header
    model_class = MODEL_CLASSES.get(kind)
    if model_class is None:
        raise DeserializationError(f"{path}: unknown model kind {kind!r}")
    if version != str(model_class.format_version):
        raise DeserializationError(
            f"{path}: format version {version} is not supported (expected {model_class.format_version})"
        )
    if lines[-1] != FOOTER:
        raise DeserializationError(f"{path}: truncated model file (missing END marker)")

    reader = BodyReader(lines[1:], str(path))
    model = model_class.load_body(language, reader)
    reader.finish()
    model.artifacts = [path]
    return model


load_model = deserialize

__all__ = [
    'BUILTIN_KINDS', 'BUILTIN_PARAMS', 'MODEL_CLASSES', 'Tagger', 'TaggerModel', 'ProcessSpec',
    'UnigramModel', 'HmmModel', 'TnTModel', 'BrillModel', 'BrillRule',
    'train_unigram', 'hmm_train', 'hmm_tag', 'tnt_train', 'tnt_tag', 'brill_train', 'brill_apply',
    'tune_on_dev', 'check_beam_on_dev', 'train_builtin', 'deserialize', 'load_model',
    'ExternalTagger', 'external_tag',
]
