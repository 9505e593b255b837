"""
Common tagger contract and the versioned plain-text model format.

Every built-in model serializes to a single artifact file:

    TAGMARK <kind> <format-version> <language>
    <body lines, one record per line, tab separated>
    END

Bodies are made of named sections ("lexicon 3" followed by three
records) so a truncated file fails on a short section or a missing END.
Counts are written as integers and floats with repr(), which round-trips
exactly; models rebuild their derived tables from those numbers with the
same code path used in training.
"""

import os
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import ClassVar, Dict, Iterable, Iterator, List, Optional, Sequence, Union

from ..corpus import TagSet
from ..errors import DeserializationError

HEADER_MAGIC = 'TAGMARK'
FOOTER = 'END'
ARTIFACT_SUFFIX = '.model'

# tagmark-harness/src, so child interpreters can import the package
PACKAGE_ROOT = Path(__file__).resolve().parent.parent.parent


@dataclass(frozen=True)
class ProcessSpec:
    """How to launch one isolated inference process."""
    argv: List[str]
    env: Dict[str, str] = field(default_factory=dict)
    cwd: Optional[Path] = None
    stdin_path: Optional[Path] = None

    def full_env(self) -> Dict[str, str]:
        return {**os.environ, **self.env}


def header_line(kind: str, version: int, language: str) -> str:
    return f"{HEADER_MAGIC} {kind} {version} {language}"


class BodyReader:
    """Sequential reader over the body lines of an artifact file."""

    def __init__(self, lines: Sequence[str], source: str):
        self._lines = lines
        self._pos = 0
        self.source = source

    def next_line(self) -> str:
        if self._pos >= len(self._lines):
            raise DeserializationError(f"{self.source}: truncated model file (unexpected end of data)")
        line = self._lines[self._pos]
        self._pos += 1
        return line

    def keyed(self, key: str) -> List[str]:
        """Read a "key v1 v2 ..." line (space separated)."""
        parts = self.next_line().split(' ')
        if parts[0] != key:
            raise DeserializationError(f"{self.source}: expected '{key}', found '{parts[0]}'")
        return parts[1:]

    def section(self, name: str, width: int) -> Iterator[List[str]]:
        """Yield the tab-separated records of a "name <count>" section."""
        values = self.keyed(name)
        try:
            count = int(values[0])
        except (IndexError, ValueError):
            raise DeserializationError(f"{self.source}: bad record count for section '{name}'") from None
        for _ in range(count):
            record = self.next_line().split('\t')
            if len(record) != width:
                raise DeserializationError(
                    f"{self.source}: section '{name}' expects {width} fields, found {len(record)}"
                )
            yield record

    def finish(self):
        if self.next_line() != FOOTER:
            raise DeserializationError(f"{self.source}: missing END marker")
        if self._pos != len(self._lines):
            raise DeserializationError(f"{self.source}: trailing data after END")


def section(name: str, records: Sequence[Sequence[object]]) -> List[str]:
    return [f"{name} {len(records)}"] + ['\t'.join(str(v) for v in record) for record in records]


def parse_int(value: str, reader: BodyReader) -> int:
    try:
        return int(value)
    except ValueError:
        raise DeserializationError(f"{reader.source}: expected an integer, found {value!r}") from None


def parse_float(value: str, reader: BodyReader) -> float:
    try:
        return float(value)
    except ValueError:
        raise DeserializationError(f"{reader.source}: expected a number, found {value!r}") from None


class TaggerModel(ABC):
    """
    A trained tagger for one language.

    Subclasses implement tag(), dump_body() and load_body(); everything
    else (artifact handling, isolated inference command) is shared.
    """

    kind: ClassVar[str]
    format_version: ClassVar[int] = 1

    def __init__(self, language: str, tagset: TagSet):
        self.language = language
        self.tagset = tagset
        self.artifacts: List[Path] = []

    @abstractmethod
    def tag(self, forms: Sequence[str]) -> List[str]:
        """Return exactly one tag per form."""

    def tag_sentences(self, sentences: Iterable[Sequence[str]]) -> List[List[str]]:
        return [self.tag(forms) if forms else [] for forms in sentences]

    @abstractmethod
    def dump_body(self) -> List[str]:
        """Body lines of the artifact file, deterministic for a given model."""

    @classmethod
    @abstractmethod
    def load_body(cls, language: str, reader: BodyReader) -> 'TaggerModel':
        """Rebuild a model from the body written by dump_body()."""

    def serialize(self, directory: Union[str, Path]) -> List[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{self.kind}{ARTIFACT_SUFFIX}"
        lines = [header_line(self.kind, self.format_version, self.language)] + self.dump_body() + [FOOTER]
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write('\n'.join(lines) + '\n')
        self.artifacts = [path]
        return list(self.artifacts)

    def artifact_files(self) -> List[Path]:
        return list(self.artifacts)

    def inference_process(self, input_path: Path) -> ProcessSpec:
        """The stdio tagger server loading this model's artifact, fed input_path."""
        if not self.artifacts:
            raise ValueError(f"{self.kind} model has not been serialized")
        pythonpath = os.pathsep.join(filter(None, [str(PACKAGE_ROOT), os.environ.get('PYTHONPATH', '')]))
        return ProcessSpec(
            argv=[sys.executable, '-m', 'tagmark', 'serve', '--model', str(self.artifacts[0])],
            env={'PYTHONPATH': pythonpath},
            stdin_path=Path(input_path),
        )

    def __repr__(self) -> str:
        return f"{type(self).__name__}(language={self.language!r}, tags={len(self.tagset)})"
