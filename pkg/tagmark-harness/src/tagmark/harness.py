"""
Experiment orchestration.

The unit of work is a (tagger, language) cell. Each cell trains on the
train split (dev where the tagger uses it), serializes, evaluates on the
test split and writes one record. Cell outcomes go to an append-only
manifest so a rerun with the same config hash skips finished work; a
failing cell is recorded and never stops the others.

Layout of the output directory:

    manifest.jsonl
    records.jsonl                      all evaluated records of this config
    <tagger>/<language>/model/         serialized artifacts
    <tagger>/<language>/data/          curated splits (external taggers)
    <tagger>/<language>/metrics.jsonl  the cell's record
    <tagger>/<language>/cell.log
"""

import fcntl
import json
import os
import sys
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from loguru import logger

from .config import ExperimentConfig, TaggerConfig, config_hash
from .corpus import SPLITS, Treebank, load_treebank, write_curated
from .errors import TagmarkError
from .metrics import MeasurementRecord, evaluate, load_records, now_iso, write_records
from .report import build_report
from .taggers import ExternalTagger, deserialize, train_builtin
from .taggers.base import ARTIFACT_SUFFIX, PACKAGE_ROOT, ProcessSpec

STAGES = ('train', 'evaluate', 'run')
TRAINED = 'trained'
EVALUATED = 'evaluated'
FAILED = 'failed'

CellKey = Tuple[str, str]


@dataclass
class ManifestEntry:
    tagger: str
    language: str
    status: str
    config_hash: str
    stage: str
    at: str
    artifacts: List[str] = field(default_factory=list)
    record: Optional[str] = None
    cause: Optional[str] = None

    @property
    def key(self) -> CellKey:
        return (self.tagger, self.language)


class Manifest:
    """Append-only JSON-lines log of cell outcomes; the last entry per cell wins."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._lock = threading.Lock()

    def load(self, current_hash: Optional[str] = None) -> Dict[CellKey, ManifestEntry]:
        entries: Dict[CellKey, ManifestEntry] = {}
        if not self.path.exists():
            return entries
        with self.path.open('r', encoding='utf-8') as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    entry = ManifestEntry(**json.loads(line))
                except (json.JSONDecodeError, TypeError) as e:
                    logger.warning(f"{self.path}:{line_number}: unreadable manifest entry ({e})")
                    continue
                if current_hash is not None and entry.config_hash != current_hash:
                    continue
                entries[entry.key] = entry
        return entries

    def append(self, entry: ManifestEntry):
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open('a', encoding='utf-8') as handle:
                handle.write(json.dumps(asdict(entry), sort_keys=True) + '\n')
                handle.flush()
                os.fsync(handle.fileno())


class MemoryLock:
    """
    Serializes memory measurements: a lock for threads of this process
    plus an exclusive flock on a shared file for other harness processes.
    """

    _threads = threading.Lock()

    def __init__(self, lock_file: Optional[Union[str, Path]] = None):
        self.lock_file = Path(lock_file or Path(tempfile.gettempdir()) / 'tagmark-memory.lock')
        self._handle = None

    def __enter__(self):
        self._threads.acquire()
        try:
            self.lock_file.parent.mkdir(parents=True, exist_ok=True)
            self._handle = open(self.lock_file, 'a')
            fcntl.flock(self._handle.fileno(), fcntl.LOCK_EX)
        except BaseException:
            if self._handle is not None:
                self._handle.close()
                self._handle = None
            self._threads.release()
            raise
        return self

    def __exit__(self, *exc):
        try:
            fcntl.flock(self._handle.fileno(), fcntl.LOCK_UN)
            self._handle.close()
        finally:
            self._handle = None
            self._threads.release()


@dataclass
class RunSummary:
    config_hash: str
    output_dir: Path
    entries: Dict[CellKey, ManifestEntry]
    records: List[MeasurementRecord]
    skipped: List[CellKey] = field(default_factory=list)

    @property
    def failed(self) -> List[ManifestEntry]:
        return [e for e in self.entries.values() if e.status == FAILED]

    @property
    def exit_code(self) -> int:
        return 2 if self.failed else 0


def cell_dir(out: Path, key: CellKey) -> Path:
    return out / key[0] / key[1]


def was_trained(entry: Optional[ManifestEntry]) -> bool:
    """Last entry is trained or evaluated, or a failure that happened after training."""
    if entry is None:
        return False
    return entry.status in (TRAINED, EVALUATED) or (entry.status == FAILED and entry.stage == 'evaluate')


def builtin_baseline() -> ProcessSpec:
    """Interpreter with the package imported and no model: the calibration process."""
    pythonpath = os.pathsep.join(filter(None, [str(PACKAGE_ROOT), os.environ.get('PYTHONPATH', '')]))
    return ProcessSpec(argv=[sys.executable, '-c', 'import tagmark.serve'], env={'PYTHONPATH': pythonpath})


class ExperimentRunner:
    """Runs the cells of one validated config into one output directory."""

    def __init__(
        self,
        config: ExperimentConfig,
        output_dir: Union[str, Path],
        taggers: Optional[Sequence[str]] = None,
        languages: Optional[Sequence[str]] = None,
    ):
        self.config = config
        self.out = Path(output_dir)
        self.tagger_ids = list(taggers) if taggers else [t.id for t in config.taggers]
        self.language_codes = list(languages) if languages else [l.code for l in config.languages]
        for tagger_id in self.tagger_ids:
            config.tagger(tagger_id)
        for code in self.language_codes:
            config.language(code)
        self.manifest = Manifest(self.out / 'manifest.jsonl')
        self.memory_lock = MemoryLock(config.measurement.lock_file)
        self.treebanks: Dict[str, Treebank] = {}
        self.hash: Optional[str] = None

    def load_data(self) -> str:
        """Load every configured treebank and pin the config hash."""
        for language in self.config.languages:
            if language.code not in self.treebanks:
                self.treebanks[language.code] = load_treebank(
                    language.treebank, language.code, language.curation.options()
                )
        self.hash = config_hash(self.config, {code: tb.files for code, tb in self.treebanks.items()})
        logger.info(f"Config hash {self.hash[:12]}")
        return self.hash

    def run(self, stage: str = 'run', resume: bool = True) -> RunSummary:
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")
        self.out.mkdir(parents=True, exist_ok=True)
        current_hash = self.load_data()
        # evaluate needs the trained cells even when nothing is skipped
        previous = self.manifest.load(current_hash)
        done = previous if resume else {}

        wanted = {TRAINED, EVALUATED} if stage == 'train' else {EVALUATED}
        cells: List[CellKey] = []
        skipped: List[CellKey] = []
        for tagger_id in self.tagger_ids:
            for code in self.language_codes:
                key = (tagger_id, code)
                if key in done and done[key].status in wanted:
                    skipped.append(key)
                else:
                    cells.append(key)
        if skipped:
            logger.info(f"Resuming: {len(skipped)} cells already done, {len(cells)} to run")

        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            list(pool.map(lambda key: self.run_cell(key, stage, previous.get(key)), cells))

        entries = self.manifest.load(current_hash)
        records = self.collect_records(entries)
        return RunSummary(current_hash, self.out, entries, records, skipped)

    def run_cell(self, key: CellKey, stage: str, previous: Optional[ManifestEntry] = None) -> ManifestEntry:
        tagger_id, code = key
        directory = cell_dir(self.out, key)
        directory.mkdir(parents=True, exist_ok=True)
        cell_name = f"{tagger_id}/{code}"
        sink = logger.add(
            directory / 'cell.log',
            level='DEBUG',
            format='{time} - {name} - {level} - {message}',
            filter=lambda record: record['extra'].get('cell') == cell_name,
        )
        try:
            with logger.contextualize(cell=cell_name):
                return self._run_cell(key, stage, previous, directory)
        finally:
            logger.remove(sink)

    def _run_cell(self, key: CellKey, stage: str, previous: Optional[ManifestEntry], directory: Path) -> ManifestEntry:
        tagger_id, code = key
        tagger_config = self.config.tagger(tagger_id)
        current = 'train'
        try:
            if stage == 'evaluate' and was_trained(previous):
                tagger = self.restore(tagger_config, code, directory)
            elif stage == 'evaluate':
                raise TagmarkError('not trained yet; run the train stage first')
            else:
                tagger = self.train(tagger_config, code, directory)
                trained = self._entry(key, TRAINED, 'train', tagger.artifact_files())
                self.manifest.append(trained)
                if stage == 'train':
                    return trained

            current = 'evaluate'
            record = self.evaluate(tagger, tagger_config, code, directory)
            metrics_path = write_records([record], directory / 'metrics.jsonl')
            entry = self._entry(key, EVALUATED, 'evaluate', tagger.artifact_files(), record=metrics_path)
            self.manifest.append(entry)
            return entry
        except Exception as e:
            (directory / 'metrics.jsonl').unlink(missing_ok=True)
            cause = f"{type(e).__name__}: {e}"
            logger.opt(exception=e).error(f"{tagger_id}/{code} failed during {current}: {cause}")
            entry = self._entry(key, FAILED, current, [], cause=cause)
            self.manifest.append(entry)
            return entry

    def _entry(self, key: CellKey, status: str, stage: str, artifacts, record: Optional[Path] = None,
               cause: Optional[str] = None) -> ManifestEntry:
        return ManifestEntry(
            tagger=key[0],
            language=key[1],
            status=status,
            config_hash=self.hash,
            stage=stage,
            at=now_iso(),
            artifacts=[str(a) for a in artifacts],
            record=str(record) if record else None,
            cause=cause,
        )

    def _external(self, tagger_config: TaggerConfig, code: str, directory: Path) -> ExternalTagger:
        data = directory / 'data'
        values = {
            'train': data / 'train.tsv',
            'dev': data / 'dev.tsv',
            'model_dir': directory / 'model',
            'language': code,
            'seed': self.config.seed,
        }
        return ExternalTagger(
            tagger_config.id,
            tagger_config.command,
            env=tagger_config.env,
            cwd=tagger_config.cwd,
            artifacts=tagger_config.artifacts,
            train_command=tagger_config.train_command,
            values=values,
        )

    def train(self, tagger_config: TaggerConfig, code: str, directory: Path):
        treebank = self.treebanks[code]
        if tagger_config.builtin:
            model = train_builtin(
                tagger_config.kind, treebank.train, treebank.dev, code, tagger_config.params
            )
            model.serialize(directory / 'model')
            return model

        for split in SPLITS:
            write_curated(treebank.split(split), directory / 'data' / f"{split}.tsv")
        (directory / 'model').mkdir(parents=True, exist_ok=True)
        tagger = self._external(tagger_config, code, directory)
        tagger.train()
        return tagger

    def restore(self, tagger_config: TaggerConfig, code: str, directory: Path):
        if tagger_config.builtin:
            return deserialize([directory / 'model' / f"{tagger_config.kind}{ARTIFACT_SUFFIX}"])
        return self._external(tagger_config, code, directory)

    def evaluate(self, tagger, tagger_config: TaggerConfig, code: str, directory: Path) -> MeasurementRecord:
        selection = self.config.metrics
        measurement = self.config.measurement
        baseline = None
        if selection.memory and measurement.baseline:
            if tagger_config.builtin:
                baseline = builtin_baseline()
            elif tagger_config.baseline_command:
                baseline = ProcessSpec(
                    argv=list(tagger_config.baseline_command), env=dict(tagger_config.env),
                    cwd=Path(tagger_config.cwd) if tagger_config.cwd else None,
                )
        return evaluate(
            tagger,
            self.treebanks[code].test,
            tagger_id=tagger_config.id,
            tagger_kind=tagger_config.kind,
            language=code,
            config_hash=self.hash,
            workdir=directory,
            memory=selection.memory,
            model_size_metric=selection.model_size,
            compressed_size_metric=selection.compressed_size,
            poll_hz=measurement.poll_hz,
            compression_preset=measurement.compression_preset,
            baseline=baseline,
            memory_lock=self.memory_lock,
        )

    def collect_records(self, entries: Dict[CellKey, ManifestEntry]) -> List[MeasurementRecord]:
        """Rewrite records.jsonl from the evaluated cells, ordered by language then tagger."""
        records = []
        for key in sorted(entries, key=lambda k: (k[1], k[0])):
            entry = entries[key]
            if entry.status != EVALUATED or not entry.record:
                continue
            records.extend(r for r in load_records(entry.record) if r.config_hash == self.hash)
        write_records(records, self.out / 'records.jsonl')
        return records


def run_experiment(
    config: ExperimentConfig,
    output_dir: Union[str, Path],
    stage: str = 'run',
    taggers: Optional[Sequence[str]] = None,
    languages: Optional[Sequence[str]] = None,
    resume: bool = True,
) -> RunSummary:
    """Run (or resume) the selected cells; `stage == 'run'` also writes the report."""
    runner = ExperimentRunner(config, output_dir, taggers, languages)
    summary = runner.run(stage, resume)
    if stage == 'run' and summary.records:
        build_report(summary.records, Path(output_dir) / 'report', all_pairs=config.report.all_pairs)
    logger.info(
        f"{len(summary.entries)} cells in manifest, {len(summary.records)} records, "
        f"{len(summary.failed)} failed"
    )
    return summary
