"""
Experiment configuration.

A YAML document validated into pydantic models. validate_config() never
stops at the first problem: schema errors from pydantic and the
filesystem/roster checks are collected into one ConfigError whose issues
carry pointers such as "taggers[1].kind".
"""

import hashlib
import json
import os
import re
import string
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import pydantic
import yaml
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from .corpus import SPLITS, CurationOptions
from .errors import ConfigError
from .metrics import DEFAULT_COMPRESSION_PRESET, DEFAULT_POLL_HZ
from .taggers import BUILTIN_KINDS, BUILTIN_PARAMS
from .taggers.external import PLACEHOLDERS

EXTERNAL_KIND = 'external'
VALID_KINDS = (*BUILTIN_KINDS, EXTERNAL_KIND)
DEFAULT_OUTPUT_DIR = 'runs'
_ID = re.compile(r'^[A-Za-z0-9][A-Za-z0-9_.-]*$')


class CurationConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    svmtool_compat: bool = False

    def options(self) -> CurationOptions:
        return CurationOptions(svmtool_compat=self.svmtool_compat)


class LanguageConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    code: str = Field(min_length=1)
    treebank: str = Field(min_length=1)
    curation: CurationConfig = Field(default_factory=CurationConfig)


class TaggerConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    id: str = Field(min_length=1)
    kind: str
    params: Dict[str, Any] = Field(default_factory=dict)
    # external taggers only
    command: Optional[List[str]] = None
    train_command: Optional[List[str]] = None
    baseline_command: Optional[List[str]] = None
    artifacts: List[str] = Field(default_factory=list)
    env: Dict[str, str] = Field(default_factory=dict)
    cwd: Optional[str] = None

    @pydantic.field_validator('kind')
    @classmethod
    def known_kind(cls, kind: str) -> str:
        if kind not in VALID_KINDS:
            raise ValueError(f"unknown tagger kind {kind!r}; valid kinds: {', '.join(VALID_KINDS)}")
        return kind

    @property
    def builtin(self) -> bool:
        return self.kind != EXTERNAL_KIND


class MetricSelection(BaseModel):
    """Accuracy is always measured; size metrics can be switched off."""
    model_config = ConfigDict(extra='forbid')

    memory: bool = True
    model_size: bool = True
    compressed_size: bool = True


class MeasurementConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    poll_hz: float = Field(DEFAULT_POLL_HZ, gt=0)
    compression_preset: int = Field(DEFAULT_COMPRESSION_PRESET, ge=0, le=9)
    baseline: bool = False
    lock_file: Optional[str] = None


class ReportConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    all_pairs: bool = False


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    languages: List[LanguageConfig] = Field(min_length=1)
    taggers: List[TaggerConfig] = Field(min_length=1)
    metrics: MetricSelection = Field(default_factory=MetricSelection)
    measurement: MeasurementConfig = Field(default_factory=MeasurementConfig)
    report: ReportConfig = Field(default_factory=ReportConfig)
    output_dir: Optional[str] = None
    seed: int = 0
    workers: int = Field(1, ge=1)

    def language(self, code: str) -> LanguageConfig:
        for language in self.languages:
            if language.code == code:
                return language
        raise KeyError(code)

    def tagger(self, tagger_id: str) -> TaggerConfig:
        for tagger in self.taggers:
            if tagger.id == tagger_id:
                return tagger
        raise KeyError(tagger_id)


def pointer(location: Sequence[Union[str, int]]) -> str:
    """('taggers', 1, 'kind') -> 'taggers[1].kind'"""
    out = ''
    for part in location:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += f".{part}" if out else str(part)
    return out or '<root>'


def _placeholders(arguments: Sequence[str]) -> List[str]:
    names = []
    for argument in arguments:
        for _, name, _, _ in string.Formatter().parse(argument):
            if name is not None:
                names.append(name)
    return names


def _roster_issues(config: ExperimentConfig, base_dir: Path) -> List[Tuple[str, str]]:
    issues: List[Tuple[str, str]] = []

    seen_codes = set()
    for i, language in enumerate(config.languages):
        if language.code in seen_codes:
            issues.append((f"languages[{i}].code", f"duplicate language {language.code!r}"))
        seen_codes.add(language.code)
        if not _ID.match(language.code):
            issues.append((f"languages[{i}].code", f"invalid language code {language.code!r}"))
        if not (base_dir / language.treebank).is_dir():
            issues.append((f"languages[{i}].treebank", f"directory not found: {language.treebank}"))

    seen_ids = set()
    for i, tagger in enumerate(config.taggers):
        where = f"taggers[{i}]"
        if tagger.id in seen_ids:
            issues.append((f"{where}.id", f"duplicate tagger id {tagger.id!r}"))
        seen_ids.add(tagger.id)
        if not _ID.match(tagger.id):
            issues.append((f"{where}.id", f"invalid tagger id {tagger.id!r}"))

        if tagger.builtin:
            allowed = BUILTIN_PARAMS[tagger.kind]
            for name in sorted(tagger.params):
                if name not in allowed:
                    valid = ', '.join(allowed) or 'none'
                    issues.append((f"{where}.params.{name}", f"not a {tagger.kind} parameter (valid: {valid})"))
            for name in ('command', 'train_command', 'baseline_command'):
                if getattr(tagger, name):
                    issues.append((f"{where}.{name}", 'only external taggers take commands'))
            issues += _numeric_param_issues(where, tagger.params)
        else:
            if not tagger.command:
                issues.append((f"{where}.command", 'external taggers need a command'))
            for name in ('command', 'train_command', 'artifacts'):
                for placeholder in _placeholders(getattr(tagger, name) or []):
                    if placeholder not in PLACEHOLDERS:
                        issues.append((
                            f"{where}.{name}",
                            f"unknown placeholder {{{placeholder}}}; valid: {', '.join(PLACEHOLDERS)}",
                        ))
            if tagger.cwd and not (base_dir / tagger.cwd).is_dir():
                issues.append((f"{where}.cwd", f"directory not found: {tagger.cwd}"))
    return issues


def _numeric_param_issues(where: str, params: Mapping[str, Any]) -> List[Tuple[str, str]]:
    minimums = {'alpha': 0, 'suffix_length': 0, 'rare_cutoff': 0, 'beam': 1, 'threshold': 1, 'max_rules': 0}
    issues = []
    for name, minimum in minimums.items():
        if name not in params:
            continue
        value = params[name]
        if name == 'beam' and value is None:
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            issues.append((f"{where}.params.{name}", f"expected a number, got {value!r}"))
        elif value < minimum:
            issues.append((f"{where}.params.{name}", f"must be >= {minimum}, got {value}"))
    return issues


def validate_config(data: Any, base_dir: Union[str, Path] = '.') -> ExperimentConfig:
    """Validate a parsed config document; raise ConfigError listing every problem."""
    base_dir = Path(base_dir)
    if not isinstance(data, dict):
        raise ConfigError([('<root>', 'config must be a mapping')])
    try:
        config = ExperimentConfig.model_validate(data)
    except pydantic.ValidationError as e:
        issues = [(pointer(error['loc']), error['msg']) for error in e.errors()]
        raise ConfigError(issues) from None

    issues = _roster_issues(config, base_dir)
    if issues:
        raise ConfigError(issues)

    # resolve relative paths against the config file's directory
    for language in config.languages:
        language.treebank = str((base_dir / language.treebank).resolve())
    for tagger in config.taggers:
        if tagger.cwd:
            tagger.cwd = str((base_dir / tagger.cwd).resolve())
    if config.output_dir is not None:
        config.output_dir = str((base_dir / config.output_dir).resolve())
    if config.measurement.lock_file:
        config.measurement.lock_file = str((base_dir / config.measurement.lock_file).resolve())
    return config


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError([('<file>', f"cannot read {path}: {e}")]) from None
    except yaml.YAMLError as e:
        raise ConfigError([('<document>', f"invalid YAML: {e}")]) from None
    config = validate_config(data, path.parent)
    logger.debug(f"Loaded config {path}: {len(config.languages)} languages, {len(config.taggers)} taggers")
    return config


def output_dir(config: ExperimentConfig, override: Optional[Union[str, Path]] = None) -> Path:
    """--out beats the config file, which beats TAGMARK_OUTPUT_DIR."""
    if override:
        return Path(override)
    if config.output_dir:
        return Path(config.output_dir)
    return Path(os.environ.get('TAGMARK_OUTPUT_DIR', DEFAULT_OUTPUT_DIR))


def file_digest(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(config: ExperimentConfig, treebank_files: Mapping[str, Mapping[str, Path]]) -> str:
    """
    SHA-256 pinning the settings and the exact treebank bytes.

    treebank_files maps language code -> split -> file. Paths and the
    output directory are left out so the hash survives a move.
    """
    canonical = config.model_dump(mode='json', exclude={'output_dir'})
    for language in canonical['languages']:
        language.pop('treebank')
    canonical['measurement'].pop('lock_file')
    canonical['treebanks'] = {
        code: {split: file_digest(files[split]) for split in SPLITS if split in files}
        for code, files in sorted(treebank_files.items())
    }
    payload = json.dumps(canonical, sort_keys=True, separators=(',', ':'), ensure_ascii=False)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()
