"""
Pareto skylines over (size, accuracy) points: smaller size is better,
higher accuracy is better. A point belongs to the skyline when no other
point is at least as good on both axes and strictly better on one.
"""

from collections import defaultdict
from dataclasses import dataclass
from itertools import groupby
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from loguru import logger

from .errors import SkylineError
from .metrics import MeasurementRecord

# record field behind each metric name
SIZE_METRICS: Dict[str, str] = {
    'memory': 'memory_avg_kb',
    'model_size': 'model_kb',
    'compressed_size': 'model_compressed_kb',
}
ACCURACY_METRICS: Dict[str, str] = {
    'token': 'token_accuracy',
    'sentence': 'sentence_accuracy',
}


@dataclass(frozen=True)
class MetricPoint:
    tagger: str
    size_value: float
    accuracy_value: float
    language: str = ''
    size_metric: str = 'memory'
    accuracy_metric: str = 'token'

    def __post_init__(self):
        if not self.size_value > 0:
            raise SkylineError(f"{self.tagger}: size must be > 0, got {self.size_value}")
        if not 0.0 <= self.accuracy_value <= 1.0:
            raise SkylineError(f"{self.tagger}: accuracy must be in [0, 1], got {self.accuracy_value}")

    @property
    def kinds(self) -> Tuple[str, str, str]:
        return (self.language, self.size_metric, self.accuracy_metric)


@dataclass(frozen=True)
class Skyline:
    """Skyline members ordered by ascending size."""
    points: Tuple[MetricPoint, ...]

    @property
    def taggers(self) -> List[str]:
        return [p.tagger for p in self.points]

    def __contains__(self, point: object) -> bool:
        return point in self.points

    def __len__(self) -> int:
        return len(self.points)


def dominates(p: MetricPoint, q: MetricPoint) -> bool:
    if p.kinds != q.kinds:
        raise SkylineError(f"cannot compare points of different kinds: {p.kinds} vs {q.kinds}")
    return (
        p.size_value <= q.size_value
        and p.accuracy_value >= q.accuracy_value
        and (p.size_value < q.size_value or p.accuracy_value > q.accuracy_value)
    )


def compute_skyline(points: Sequence[MetricPoint]) -> Skyline:
    """Sort by size (ties: higher accuracy first) and sweep with a running best accuracy."""
    if not points:
        raise SkylineError('cannot compute the skyline of no points')
    kinds = {p.kinds for p in points}
    if len(kinds) > 1:
        raise SkylineError(f"points mix languages or metric kinds: {sorted(kinds)}")

    ordered = sorted(points, key=lambda p: (p.size_value, -p.accuracy_value, p.tagger))
    members: List[MetricPoint] = []
    best: Optional[float] = None
    for _, group in groupby(ordered, key=lambda p: p.size_value):
        group = list(group)
        top = group[0].accuracy_value
        if best is None or top > best:
            members.extend(p for p in group if p.accuracy_value == top)
            best = top
    return Skyline(tuple(members))


def record_value(record: MeasurementRecord, metric: str) -> Optional[float]:
    if metric in SIZE_METRICS:
        return getattr(record.size, SIZE_METRICS[metric])
    if metric in ACCURACY_METRICS:
        return getattr(record.accuracy, ACCURACY_METRICS[metric])
    raise SkylineError(f"unknown metric {metric!r}")


def points_from_records(
    records: Iterable[MeasurementRecord],
    language: str,
    size_metric: str = 'memory',
    accuracy_metric: str = 'token',
) -> List[MetricPoint]:
    """Points for one language; records without a positive size value are skipped."""
    if size_metric not in SIZE_METRICS:
        raise SkylineError(f"unknown size metric {size_metric!r}; expected one of {', '.join(SIZE_METRICS)}")
    if accuracy_metric not in ACCURACY_METRICS:
        raise SkylineError(f"unknown accuracy metric {accuracy_metric!r}")
    points = []
    for record in records:
        if record.language != language:
            continue
        size = record_value(record, size_metric)
        if size is None or size <= 0:
            logger.debug(f"{record.tagger}/{language}: no {size_metric} value, left out of the skyline")
            continue
        points.append(MetricPoint(
            tagger=record.tagger,
            size_value=float(size),
            accuracy_value=float(record_value(record, accuracy_metric)),
            language=language,
            size_metric=size_metric,
            accuracy_metric=accuracy_metric,
        ))
    return points


def skyline_membership(
    records: Sequence[MeasurementRecord],
    size_metric: str = 'memory',
    accuracy_metric: str = 'token',
) -> Dict[str, Skyline]:
    """Per-language skyline; languages without usable points are absent."""
    membership = {}
    for language in sorted({r.language for r in records}):
        points = points_from_records(records, language, size_metric, accuracy_metric)
        if points:
            membership[language] = compute_skyline(points)
    return membership


def skyline_counts(
    records: Sequence[MeasurementRecord],
    size_metric: str = 'memory',
    accuracy_metric: str = 'token',
) -> Dict[str, int]:
    """Number of languages on whose skyline each tagger sits (0 included)."""
    counts: Dict[str, int] = defaultdict(int)
    for record in records:
        counts[record.tagger] += 0
    for skyline in skyline_membership(records, size_metric, accuracy_metric).values():
        for tagger in sorted(set(skyline.taggers)):
            counts[tagger] += 1
    return dict(sorted(counts.items()))
