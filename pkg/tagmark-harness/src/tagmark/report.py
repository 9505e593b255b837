"""
Result artifacts from persisted measurement records.

    tables/       token and sentence accuracy (languages x taggers, with
                  averages over present cells) and average sizes per tagger,
                  as CSV and markdown
    plots/        one skyline SVG per (language, size metric, accuracy metric)
    skyline_counts_{token,sentence}.csv/.svg   optimality counts per accuracy metric
    reproduction.md   measured accuracies against reference values
    provenance.json   config hashes and library versions

Nothing here depends on wall-clock time, so a bundle is byte-identical
for identical records (memory columns aside, which vary between runs).
"""

import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from . import __version__
from .metrics import MeasurementRecord
from .skyline import ACCURACY_METRICS, SIZE_METRICS, MetricPoint, Skyline, compute_skyline, points_from_records, skyline_counts
from .svg import Circle, Group, Line, Polyline, Rect, Scene, Text

MISSING = '-'
REFERENCE_BAND = 5.0

# reference test-set accuracies (percent) of the classical taggers
REFERENCE_TOKEN: Dict[str, Dict[str, float]] = {
    'brill': {'ar': 92.36, 'zh': 83.50, 'en': 84.07, 'es': 94.50, 'da': 86.08, 'hi': 92.75, 'ru': 80.00, 'tr': 78.33},
    'tnt': {'ar': 90.49, 'zh': 80.59, 'en': 80.15, 'es': 92.18, 'da': 80.76, 'hi': 91.10, 'ru': 71.26, 'tr': 70.95},
    'hmm': {'ar': 92.25, 'zh': 83.04, 'en': 83.73, 'es': 94.11, 'da': 86.15, 'hi': 92.09, 'ru': 79.74, 'tr': 78.08},
}
REFERENCE_SENTENCE: Dict[str, Dict[str, float]] = {
    'brill': {'ar': 23.68, 'zh': 6.40, 'en': 17.30, 'es': 28.76, 'da': 17.52, 'hi': 33.43, 'ru': 10.32, 'tr': 19.02},
    'tnt': {'ar': 17.50, 'zh': 2.40, 'en': 12.13, 'es': 18.07, 'da': 8.50, 'hi': 24.23, 'ru': 2.33, 'tr': 10.17},
    'hmm': {'ar': 23.24, 'zh': 5.60, 'en': 16.63, 'es': 25.62, 'da': 17.52, 'hi': 28.98, 'ru': 9.32, 'tr': 18.62},
}

SIZE_COLUMNS = {
    'memory_avg_kb': 'Memory',
    'memory_peak_kb': 'Peak memory',
    'memory_net_kb': 'Net memory',
    'model_kb': 'Model',
    'model_compressed_kb': 'Model compr.',
}
SIZE_LABELS = {'memory': 'Memory (kB)', 'model_size': 'Model size (kB)', 'compressed_size': 'Compressed model (kB)'}
ACCURACY_LABELS = {'token': 'Token accuracy (%)', 'sentence': 'Sentence accuracy (%)'}


@dataclass
class ReportBundle:
    directory: Path
    files: List[Path] = field(default_factory=list)

    def add(self, path: Path) -> Path:
        self.files.append(path)
        return path


def records_frame(records: Sequence[MeasurementRecord]) -> pd.DataFrame:
    rows = []
    for record in records:
        size = record.size.to_dict()
        rows.append({
            'tagger': record.tagger,
            'tagger_kind': record.tagger_kind,
            'language': record.language,
            'token_accuracy': record.accuracy.token_accuracy,
            'sentence_accuracy': record.accuracy.sentence_accuracy,
            'config_hash': record.config_hash,
            **{column: size[column] for column in SIZE_COLUMNS},
        })
    return pd.DataFrame(rows)


def percent(value: float) -> str:
    return MISSING if value is None or pd.isna(value) else f"{value:.2f}"


def scientific(value: float) -> str:
    """4.45e2 style, the way size tables print kilobytes."""
    if value is None or pd.isna(value):
        return MISSING
    mantissa, exponent = f"{value:.2e}".split('e')
    return f"{mantissa}e{int(exponent)}"


def accuracy_table(frame: pd.DataFrame, metric: str = 'token_accuracy') -> pd.DataFrame:
    """Percentages, languages as rows, taggers as columns, Avg row and column over present cells."""
    table = frame.pivot_table(index='language', columns='tagger', values=metric, aggfunc='first') * 100
    table = table.sort_index().sort_index(axis=1)
    table.columns.name = None
    table['Avg'] = table.mean(axis=1, skipna=True)
    averages = table.drop(columns='Avg').mean(axis=0, skipna=True)
    averages['Avg'] = np.nanmean(table.drop(columns='Avg').to_numpy(dtype=float))
    table.loc['Avg'] = averages
    return table


def size_table(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean of each size metric per tagger across languages."""
    columns = [c for c in SIZE_COLUMNS if frame[c].notna().any()]
    table = frame.groupby('tagger')[columns].mean().sort_index()
    return table.rename(columns=SIZE_COLUMNS)


def incomplete_taggers(frame: pd.DataFrame) -> Dict[str, Tuple[int, int]]:
    languages = frame['language'].nunique()
    present = frame.groupby('tagger')['language'].nunique()
    return {tagger: (int(n), languages) for tagger, n in present.items() if n < languages}


def render_markdown(table: pd.DataFrame, index_label: str = '') -> str:
    header = [index_label, *[str(c) for c in table.columns]]
    lines = ['| ' + ' | '.join(header) + ' |', '|' + '|'.join(['---'] + ['---:'] * len(table.columns)) + '|']
    for label, row in table.iterrows():
        lines.append('| ' + ' | '.join([str(label), *[str(v) for v in row]]) + ' |')
    return '\n'.join(lines) + '\n'


def _write_table(table: pd.DataFrame, stem: Path, index_label: str, footnotes: Sequence[str],
                 bundle: ReportBundle):
    stem.parent.mkdir(parents=True, exist_ok=True)
    csv_path = stem.with_suffix('.csv')
    table.to_csv(csv_path, index_label=index_label, lineterminator='\n')
    markdown = render_markdown(table, index_label)
    if footnotes:
        markdown += '\n' + '\n'.join(f"* {note}" for note in footnotes) + '\n'
    md_path = stem.with_suffix('.md')
    md_path.write_text(markdown, encoding='utf-8')
    bundle.add(csv_path)
    bundle.add(md_path)


def emit_tables(records: Sequence[MeasurementRecord], directory: Path, bundle: Optional[ReportBundle] = None) -> ReportBundle:
    bundle = bundle or ReportBundle(directory)
    frame = records_frame(records)
    footnotes = [
        f"Avg. for {tagger} covers {n} of {total} languages."
        for tagger, (n, total) in sorted(incomplete_taggers(frame).items())
    ]
    for metric, name in (('token_accuracy', 'token_accuracy'), ('sentence_accuracy', 'sentence_accuracy')):
        table = accuracy_table(frame, metric).apply(lambda column: column.map(percent))
        _write_table(table, directory / name, 'language', footnotes, bundle)

    sizes = size_table(frame)
    if len(sizes.columns):
        formatted = sizes.apply(lambda column: column.map(scientific))
        _write_table(formatted, directory / 'sizes', 'tagger',
                     ['Sizes in kilobytes (1 kB = 1000 bytes), averaged across languages.'], bundle)
    return bundle


class _Axis:
    """Maps a data range onto a pixel interval, optionally in log10."""

    def __init__(self, low: float, high: float, start: float, end: float, log: bool = False):
        self.low, self.high, self.start, self.end, self.log = low, high, start, end, log

    def __call__(self, value: float) -> float:
        v = math.log10(value) if self.log else value
        return self.start + (v - self.low) / (self.high - self.low) * (self.end - self.start)


def _log_range(values: Sequence[float]) -> Tuple[int, int]:
    low = math.floor(math.log10(min(values)))
    high = math.ceil(math.log10(max(values)))
    return (low, high) if high > low else (low, low + 1)


def _accuracy_range(values: Sequence[float]) -> Tuple[float, float]:
    low = max(0.0, math.floor((min(values) - 1) / 5) * 5)
    high = min(100.0, math.ceil((max(values) + 1) / 5) * 5)
    return (low, high) if high > low else (max(0.0, low - 5), min(100.0, high + 5))


def emit_skyline_plot(points: Sequence[MetricPoint], skyline: Skyline, title: str = '') -> str:
    """Scatter of size (log10) against accuracy with a dashed step-line through the skyline."""
    width, height = 560, 380
    left, right, top, bottom = 70, 30, 40, 50
    size_metric = points[0].size_metric
    accuracy_metric = points[0].accuracy_metric

    x_low, x_high = _log_range([p.size_value for p in points])
    y_low, y_high = _accuracy_range([p.accuracy_value * 100 for p in points])
    x = _Axis(x_low, x_high, left, width - right, log=True)
    y = _Axis(y_low, y_high, height - bottom, top)

    scene = Scene(width, height, title or None)
    scene.add(Rect(origin=(0, 0), width=width, height=height, attrs={'fill': 'white'}))
    if title:
        scene.add(Text(position=(width / 2, 22), content=title, attrs={'text-anchor': 'middle', 'font-size': 14}))

    axes = scene.add(Group(attrs={'class': 'axes', 'stroke': 'black'}))
    axes.add(Line(start=(left, height - bottom), end=(width - right, height - bottom)))
    axes.add(Line(start=(left, height - bottom), end=(left, top)))
    ticks = scene.add(Group(attrs={'class': 'ticks'}))
    for exponent in range(x_low, x_high + 1):
        px = x(10.0 ** exponent)
        ticks.add(Line(start=(px, height - bottom), end=(px, height - bottom + 5), attrs={'stroke': 'black'}))
        ticks.add(Text(position=(px, height - bottom + 18), content=f"1e{exponent}", attrs={'text-anchor': 'middle'}))
    step = 5 if y_high - y_low <= 30 else 10
    tick = math.ceil(y_low / step) * step
    while tick <= y_high:
        py = y(tick)
        ticks.add(Line(start=(left - 5, py), end=(left, py), attrs={'stroke': 'black'}))
        ticks.add(Text(position=(left - 8, py + 4), content=f"{tick:g}", attrs={'text-anchor': 'end'}))
        tick += step
    scene.add(Text(position=((left + width - right) / 2, height - 12), content=SIZE_LABELS[size_metric],
                   attrs={'text-anchor': 'middle'}))
    scene.add(Text(position=(16, (top + height - bottom) / 2), content=ACCURACY_LABELS[accuracy_metric],
                   attrs={'text-anchor': 'middle', 'transform': f"rotate(-90 16 {(top + height - bottom) / 2:g})"}))

    members = list(skyline.points)
    if members:
        path = [(x(members[0].size_value), y(members[0].accuracy_value * 100))]
        for point in members[1:]:
            px, py = x(point.size_value), y(point.accuracy_value * 100)
            path.append((px, path[-1][1]))
            path.append((px, py))
        scene.add(Polyline(points=path, attrs={
            'class': 'skyline', 'stroke': 'red', 'stroke-width': 1.5, 'stroke-dasharray': '6,4',
        }))

    markers = scene.add(Group(attrs={'class': 'points'}))
    for point in sorted(points, key=lambda p: (p.size_value, -p.accuracy_value, p.tagger)):
        px, py = x(point.size_value), y(point.accuracy_value * 100)
        optimal = point in skyline
        markers.add(Circle(center=(px, py), radius=4.5, attrs={
            'class': 'point optimal' if optimal else 'point',
            'fill': 'red' if optimal else 'steelblue',
            'data-tagger': point.tagger,
        }))
        markers.add(Text(position=(px + 7, py - 6), content=point.tagger))
    return scene.render()


def emit_skyline_counts(
    counts: Dict[str, Dict[str, int]], languages: int, accuracy_metric: str = 'token'
) -> Tuple[str, str]:
    """CSV text and SVG bar chart; one bar group per size metric, one bar per tagger."""
    csv_lines = ['size_metric,tagger,count']
    for size_metric, per_tagger in counts.items():
        for tagger, count in per_tagger.items():
            csv_lines.append(f"{size_metric},{tagger},{count}")
    csv_text = '\n'.join(csv_lines) + '\n'

    taggers = sorted({t for per_tagger in counts.values() for t in per_tagger})
    bar, gap = 18, 24
    group_width = max(len(taggers), 1) * bar + gap
    left, bottom, top = 50, 60, 40
    width = left + max(len(counts), 1) * group_width + 20
    height = 320
    ceiling = max(languages, 1)
    y = _Axis(0, ceiling, height - bottom, top)

    scene = Scene(width, height, f"Languages on the skyline ({ACCURACY_LABELS[accuracy_metric].split(' (')[0].lower()})")
    scene.add(Rect(origin=(0, 0), width=width, height=height, attrs={'fill': 'white'}))
    axes = scene.add(Group(attrs={'class': 'axes', 'stroke': 'black'}))
    axes.add(Line(start=(left, height - bottom), end=(width - 10, height - bottom)))
    axes.add(Line(start=(left, height - bottom), end=(left, top)))
    for level in range(ceiling + 1):
        axes.add(Text(position=(left - 8, y(level) + 4), content=str(level),
                      attrs={'text-anchor': 'end', 'stroke': 'none'}))

    palette = ['#4e79a7', '#f28e2b', '#e15759', '#76b7b2', '#59a14f', '#edc948', '#b07aa1', '#ff9da7', '#9c755f', '#bab0ac']
    for g, (size_metric, per_tagger) in enumerate(counts.items()):
        group = scene.add(Group(attrs={'class': 'bar-group', 'data-metric': size_metric}))
        x0 = left + g * group_width + gap / 2
        for i, tagger in enumerate(taggers):
            count = per_tagger.get(tagger, 0)
            top_y = y(count)
            group.add(Rect(origin=(x0 + i * bar, top_y), width=bar - 2, height=(height - bottom) - top_y, attrs={
                'class': 'bar', 'fill': palette[i % len(palette)], 'data-tagger': tagger, 'data-count': count,
            }))
        group.add(Text(position=(x0 + len(taggers) * bar / 2, height - bottom + 18),
                       content=SIZE_LABELS.get(size_metric, size_metric).split(' (')[0],
                       attrs={'text-anchor': 'middle'}))
    legend = scene.add(Group(attrs={'class': 'legend'}))
    for i, tagger in enumerate(taggers):
        legend.add(Rect(origin=(left + i * 90, height - 24), width=10, height=10,
                        attrs={'fill': palette[i % len(palette)]}))
        legend.add(Text(position=(left + i * 90 + 14, height - 15), content=tagger))
    return csv_text, scene.render()


def metric_pairs(all_pairs: bool) -> List[Tuple[str, str]]:
    if not all_pairs:
        return [('memory', 'token')]
    return [(s, a) for s in SIZE_METRICS for a in ACCURACY_METRICS]


def reproduction_check(records: Sequence[MeasurementRecord]) -> str:
    """Markdown comparing classical taggers with reference accuracies."""
    lines = ['# Reproduction check', '']
    hashes = sorted({r.config_hash for r in records})
    lines += [f"Config hash: `{h}`" for h in hashes] + ['']

    lines += [
        f"## Accuracy against reference (band ±{REFERENCE_BAND:.1f} points)", '',
        '| tagger | language | metric | measured | reference | delta | status |',
        '|---|---|---|---:|---:|---:|---|',
    ]
    compared = 0
    for record in sorted(records, key=lambda r: (r.language, r.tagger)):
        for name, measured, reference in (
            ('token', record.accuracy.token_accuracy, REFERENCE_TOKEN),
            ('sentence', record.accuracy.sentence_accuracy, REFERENCE_SENTENCE),
        ):
            expected = reference.get(record.tagger_kind, {}).get(record.language)
            if expected is None:
                continue
            value = measured * 100
            delta = value - expected
            status = 'within' if abs(delta) <= REFERENCE_BAND else ('above' if delta > 0 else 'BELOW')
            if status != 'within':
                logger.warning(
                    f"{record.tagger}/{record.language} {name} accuracy {value:.2f} is {status} the "
                    f"reference band ({expected:.2f}), config {record.config_hash[:12]}"
                )
            lines.append(
                f"| {record.tagger} | {record.language} | {name} | {value:.2f} | {expected:.2f} | {delta:+.2f} | {status} |"
            )
            compared += 1
    if not compared:
        lines.append('| - | - | - | - | - | - | no classical tagger with a reference value |')

    lines += ['', '## Ordering of classical taggers (token accuracy)', '']
    for language in sorted({r.language for r in records}):
        by_kind = {}
        for record in sorted(records, key=lambda r: r.tagger):
            if record.language == language and record.tagger_kind in REFERENCE_TOKEN:
                by_kind.setdefault(record.tagger_kind, record.accuracy.token_accuracy)
        kinds = [k for k in by_kind if language in REFERENCE_TOKEN[k]]
        if len(kinds) < 2:
            continue
        measured = sorted(kinds, key=lambda k: (-by_kind[k], k))
        expected = sorted(kinds, key=lambda k: (-REFERENCE_TOKEN[k][language], k))
        verdict = 'matches' if measured == expected else 'DIFFERS'
        lines.append(f"- {language}: measured {' > '.join(measured)}; reference {' > '.join(expected)} ({verdict})")

    lines += ['', '## Sentence accuracy never exceeds token accuracy', '']
    violations = [r for r in records if r.accuracy.sentence_accuracy > r.accuracy.token_accuracy]
    if violations:
        lines += [f"- VIOLATED by {r.tagger}/{r.language}" for r in violations]
    else:
        lines.append(f"- holds for all {len(records)} records")
    lines += [
        '', '## Curation', '',
        '- multiword-token range lines are dropped and their sub-tokens kept; the reference '
        'curation may also have removed the sub-tokens, so token counts can differ',
    ]
    return '\n'.join(lines) + '\n'


def provenance(records: Sequence[MeasurementRecord]) -> Dict[str, object]:
    return {
        'config_hashes': sorted({r.config_hash for r in records}),
        'tagmark_version': __version__,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'pandas': pd.__version__,
        'records': len(records),
    }


def build_report(records: Sequence[MeasurementRecord], directory: Path, all_pairs: bool = False) -> ReportBundle:
    if not records:
        raise ValueError('no records to report on')
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    bundle = ReportBundle(directory)

    emit_tables(records, directory / 'tables', bundle)

    plots = directory / 'plots'
    plots.mkdir(exist_ok=True)
    languages = sorted({r.language for r in records})
    for size_metric, accuracy_metric in metric_pairs(all_pairs):
        for language in languages:
            points = points_from_records(records, language, size_metric, accuracy_metric)
            if not points:
                continue
            svg = emit_skyline_plot(points, compute_skyline(points),
                                    f"{language}: {ACCURACY_LABELS[accuracy_metric]} vs {SIZE_LABELS[size_metric]}")
            path = plots / f"skyline_{language}_{size_metric}_{accuracy_metric}.svg"
            path.write_text(svg, encoding='utf-8')
            bundle.add(path)

    size_metrics = [
        s for s in SIZE_METRICS if any(points_from_records(records, language, s) for language in languages)
    ]
    for accuracy_metric in ACCURACY_METRICS:
        counts = {s: skyline_counts(records, s, accuracy_metric) for s in size_metrics}
        if not counts:
            continue
        csv_text, svg = emit_skyline_counts(counts, len(languages), accuracy_metric)
        bundle.add(directory / f"skyline_counts_{accuracy_metric}.csv").write_text(csv_text, encoding='utf-8')
        bundle.add(directory / f"skyline_counts_{accuracy_metric}.svg").write_text(svg, encoding='utf-8')

    bundle.add(directory / 'reproduction.md').write_text(reproduction_check(records), encoding='utf-8')
    bundle.add(directory / 'provenance.json').write_text(
        json.dumps(provenance(records), indent=2, sort_keys=True) + '\n', encoding='utf-8'
    )
    logger.info(f"Report written to {directory} ({len(bundle.files)} files)")
    return bundle
