"""
Accuracy and size metrics.

Accuracy is computed in-process on the test split. Memory is the mean
resident set size of a fresh inference process polled at a fixed rate,
sizes are the byte counts of the serialized artifacts, raw and inside a
deterministic tar.xz container. One kilobyte is 1000 bytes throughout.
"""

import contextlib
import json
import os
import subprocess
import sys
import tarfile
import tempfile
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, ContextManager, Dict, Iterable, List, Optional, Sequence, Union

import jsonschema
import psutil
from loguru import logger

from . import __version__
from .corpus import Sentence
from .errors import AlignmentError, MeasurementError, RecordFormatError, SizeMetricError
from .taggers.base import ProcessSpec
from .taggers.external import encode_request

DEFAULT_POLL_HZ = 2.0
DEFAULT_COMPRESSION_PRESET = 6
SCHEMA_VERSION = 1
SCHEMA_PATH = Path(__file__).parent / 'schemas' / 'measurement_record.schema.json'


@dataclass(frozen=True)
class AccuracyResult:
    token_accuracy: float
    sentence_accuracy: float
    token_count: int
    sentence_count: int


@dataclass
class SizeResult:
    """Size metrics in kB; fields of unselected metrics stay None."""
    memory_avg_kb: Optional[float] = None
    memory_peak_kb: Optional[float] = None
    memory_baseline_kb: Optional[float] = None
    sample_count: Optional[int] = None
    poll_hz: Optional[float] = None
    model_kb: Optional[float] = None
    model_compressed_kb: Optional[float] = None
    compression_preset: Optional[int] = None

    @property
    def memory_net_kb(self) -> Optional[float]:
        if self.memory_avg_kb is None or self.memory_baseline_kb is None:
            return None
        return self.memory_avg_kb - self.memory_baseline_kb

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['memory_net_kb'] = self.memory_net_kb
        return data


@dataclass
class MeasurementRecord:
    tagger: str
    tagger_kind: str
    language: str
    accuracy: AccuracyResult
    size: SizeResult
    config_hash: str
    started_at: str
    finished_at: str
    tagmark_version: str = __version__

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'tagger': self.tagger,
            'tagger_kind': self.tagger_kind,
            'language': self.language,
            'config_hash': self.config_hash,
            'tagmark_version': self.tagmark_version,
            'started_at': self.started_at,
            'finished_at': self.finished_at,
            'accuracy': asdict(self.accuracy),
            'size': self.size.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MeasurementRecord':
        size = {k: v for k, v in data['size'].items() if k != 'memory_net_kb'}
        return cls(
            tagger=data['tagger'],
            tagger_kind=data['tagger_kind'],
            language=data['language'],
            accuracy=AccuracyResult(**data['accuracy']),
            size=SizeResult(**size),
            config_hash=data['config_hash'],
            started_at=data['started_at'],
            finished_at=data['finished_at'],
            tagmark_version=data['tagmark_version'],
        )


@dataclass(frozen=True)
class MemoryResult:
    avg_kb: float
    peak_kb: float
    sample_count: int
    samples_kb: List[float] = field(default_factory=list, compare=False)


def _check_alignment(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]):
    if len(gold) != len(pred):
        index = min(len(gold), len(pred))
        raise AlignmentError(f"{len(gold)} gold sentences but {len(pred)} predicted", index)
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise AlignmentError(f"sentence {i}: {len(g)} gold tags but {len(p)} predicted", i)


def token_accuracy(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> float:
    _check_alignment(gold, pred)
    total = sum(len(g) for g in gold)
    if total == 0:
        return 0.0
    correct = sum(a == b for g, p in zip(gold, pred) for a, b in zip(g, p))
    return correct / total


def sentence_accuracy(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> float:
    _check_alignment(gold, pred)
    if not gold:
        return 0.0
    return sum(list(g) == list(p) for g, p in zip(gold, pred)) / len(gold)


def accuracy(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> AccuracyResult:
    return AccuracyResult(
        token_accuracy=token_accuracy(gold, pred),
        sentence_accuracy=sentence_accuracy(gold, pred),
        token_count=sum(len(g) for g in gold),
        sentence_count=len(gold),
    )


def _rss_bytes(process: psutil.Process) -> Optional[int]:
    """RSS of the process and all of its descendants; None once it is gone."""
    try:
        total = process.memory_info().rss
        for child in process.children(recursive=True):
            with contextlib.suppress(psutil.NoSuchProcess, psutil.ZombieProcess, psutil.AccessDenied):
                total += child.memory_info().rss
        return total or None
    except (psutil.NoSuchProcess, psutil.ZombieProcess, psutil.AccessDenied):
        return None


def _maxrss_kb(rusage) -> float:
    # bytes on macOS, KiB elsewhere
    if sys.platform == 'darwin':
        return rusage.ru_maxrss / 1000
    return rusage.ru_maxrss * 1.024


def measure_memory(spec: ProcessSpec, poll_hz: float = DEFAULT_POLL_HZ) -> MemoryResult:
    """
    Run `spec` to completion, sampling its resident set at `poll_hz`.

    A first sample is taken right after the process starts, later ones on
    a wall-clock schedule. If the process is gone before the first poll,
    its rusage peak stands in for the forced sample.
    """
    if poll_hz <= 0:
        raise MeasurementError(f"poll rate must be > 0, got {poll_hz}")
    period = 1.0 / poll_hz

    with contextlib.ExitStack() as stack:
        stdin = stack.enter_context(open(spec.stdin_path, 'rb')) if spec.stdin_path else subprocess.DEVNULL
        stderr = stack.enter_context(tempfile.TemporaryFile())
        try:
            process = subprocess.Popen(
                spec.argv, stdin=stdin, stdout=subprocess.DEVNULL, stderr=stderr,
                env=spec.full_env(), cwd=spec.cwd,
            )
        except OSError as e:
            raise MeasurementError(f"cannot start {spec.argv[0]}: {e}") from e

        watched = psutil.Process(process.pid)
        samples: List[float] = []
        first = _rss_bytes(watched)
        if first is not None:
            samples.append(first / 1000)

        next_poll = time.monotonic() + period
        while True:
            pid, status, rusage = os.wait4(process.pid, os.WNOHANG)
            if pid:
                break
            now = time.monotonic()
            if now >= next_poll:
                rss = _rss_bytes(watched)
                if rss is not None:
                    samples.append(rss / 1000)
                next_poll += period
                if next_poll < now:
                    next_poll = now + period
            else:
                time.sleep(min(next_poll - now, 0.02))

        returncode = os.waitstatus_to_exitcode(status)
        process.returncode = returncode
        peak = _maxrss_kb(rusage)
        if not samples:
            samples.append(peak)

        if returncode != 0:
            stderr.seek(0)
            tail = stderr.read().decode('utf-8', errors='replace')[-2000:]
            raise MeasurementError(
                f"inference process exited with status {returncode}: {tail.strip()}", returncode=returncode
            )

    avg = sum(samples) / len(samples)
    logger.debug(f"memory: {len(samples)} samples, avg {avg:.0f} kB, peak {max(peak, max(samples)):.0f} kB")
    return MemoryResult(avg_kb=avg, peak_kb=max(peak, max(samples)), sample_count=len(samples), samples_kb=samples)


def model_size(artifacts: Iterable[Union[str, Path]]) -> float:
    """Sum of artifact byte lengths in kB."""
    total = 0
    for path in artifacts:
        path = Path(path)
        if not path.is_file():
            raise SizeMetricError(f"artifact not found: {path}")
        total += path.stat().st_size
    return total / 1000


def _normalized(info: tarfile.TarInfo) -> tarfile.TarInfo:
    info.mtime = 0
    info.uid = info.gid = 0
    info.uname = info.gname = ''
    info.mode = 0o644
    return info


def compressed_size(artifacts: Iterable[Union[str, Path]], preset: int = DEFAULT_COMPRESSION_PRESET) -> float:
    """Byte length of a deterministic tar.xz holding the artifacts, in kB."""
    paths = sorted((Path(p) for p in artifacts), key=str)
    if not paths:
        return 0.0
    for path in paths:
        if not path.is_file():
            raise SizeMetricError(f"artifact not found: {path}")

    with tempfile.TemporaryDirectory(prefix='tagmark-xz-') as tmp:
        archive = Path(tmp) / 'model.tar.xz'
        names = set()
        try:
            with tarfile.open(archive, 'w:xz', preset=preset, format=tarfile.PAX_FORMAT) as tar:
                for i, path in enumerate(paths):
                    name = path.name if path.name not in names else f"{i}-{path.name}"
                    names.add(name)
                    info = _normalized(tar.gettarinfo(str(path), arcname=name))
                    with open(path, 'rb') as f:
                        tar.addfile(info, f)
        except (OSError, tarfile.TarError, ValueError) as e:
            raise SizeMetricError(f"compression failed: {e}") from e
        return archive.stat().st_size / 1000


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


def evaluate(
    tagger,
    test: Sequence[Sentence],
    *,
    tagger_id: str,
    tagger_kind: str,
    language: str,
    config_hash: str,
    workdir: Union[str, Path],
    memory: bool = True,
    model_size_metric: bool = True,
    compressed_size_metric: bool = True,
    poll_hz: float = DEFAULT_POLL_HZ,
    compression_preset: int = DEFAULT_COMPRESSION_PRESET,
    baseline: Optional[ProcessSpec] = None,
    memory_lock: Optional[ContextManager] = None,
) -> MeasurementRecord:
    """
    Measure one trained tagger on the test split.

    Accuracy is always computed; each size metric can be switched off.
    `memory_lock` is held around the isolated inference runs.
    """
    started = now_iso()
    gold = [s.tags for s in test]
    pred = tagger.tag_sentences([s.forms for s in test])
    result = accuracy(gold, pred)
    logger.info(
        f"{tagger_id}/{language}: token accuracy {result.token_accuracy:.4f}, "
        f"sentence accuracy {result.sentence_accuracy:.4f}"
    )

    size = SizeResult()
    if memory:
        workdir = Path(workdir)
        workdir.mkdir(parents=True, exist_ok=True)
        request = workdir / 'test.request'
        request.write_text(encode_request([s.forms for s in test]), encoding='utf-8')
        with memory_lock or contextlib.nullcontext():
            measured = measure_memory(tagger.inference_process(request), poll_hz)
            if baseline is not None:
                size.memory_baseline_kb = measure_memory(baseline, poll_hz).avg_kb
        size.memory_avg_kb = measured.avg_kb
        size.memory_peak_kb = measured.peak_kb
        size.sample_count = measured.sample_count
        size.poll_hz = poll_hz
    if model_size_metric:
        size.model_kb = model_size(tagger.artifact_files())
    if compressed_size_metric:
        size.model_compressed_kb = compressed_size(tagger.artifact_files(), compression_preset)
        size.compression_preset = compression_preset

    return MeasurementRecord(
        tagger=tagger_id,
        tagger_kind=tagger_kind,
        language=language,
        accuracy=result,
        size=size,
        config_hash=config_hash,
        started_at=started,
        finished_at=now_iso(),
    )


def _validator():
    schema = json.loads(SCHEMA_PATH.read_text(encoding='utf-8'))
    validator_class = jsonschema.validators.validator_for(schema)
    return validator_class(schema)


def validate_record(data: Dict[str, Any]):
    error = jsonschema.exceptions.best_match(_validator().iter_errors(data))
    if error is not None:
        pointer = '/'.join(str(p) for p in error.absolute_path) or '<root>'
        raise RecordFormatError(f"{pointer}: {error.message}")


def load_records(path: Union[str, Path]) -> List[MeasurementRecord]:
    """Read a JSON-lines file of records, validating each line."""
    path = Path(path)
    validator = _validator()
    records = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise RecordFormatError(f"invalid JSON: {e.msg}", line_number, str(path)) from None
            error = jsonschema.exceptions.best_match(validator.iter_errors(data))
            if error is not None:
                pointer = '/'.join(str(p) for p in error.absolute_path) or '<root>'
                raise RecordFormatError(f"{pointer}: {error.message}", line_number, str(path))
            records.append(MeasurementRecord.from_dict(data))
    return records


def write_records(records: Iterable[MeasurementRecord], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for record in records:
            validate_record(record.to_dict())
            f.write(record.to_json() + '\n')
    return path
