"""Dominance and the skyline sweep."""

import random

import pytest

from tagmark.errors import SkylineError
from tagmark.metrics import AccuracyResult, MeasurementRecord, SizeResult
from tagmark.skyline import (
    MetricPoint,
    compute_skyline,
    dominates,
    points_from_records,
    skyline_counts,
    skyline_membership,
)


def point(tagger, size, acc, language='en'):
    return MetricPoint(tagger, size, acc, language=language)


def record(tagger, language, memory, token, model_kb=10.0):
    return MeasurementRecord(
        tagger=tagger, tagger_kind=tagger, language=language,
        accuracy=AccuracyResult(token, token / 2, 100, 10),
        size=SizeResult(memory_avg_kb=memory, model_kb=model_kb),
        config_hash='0' * 64, started_at='t0', finished_at='t1',
    )


def test_dominance():
    assert dominates(point('a', 1.0, 0.9), point('b', 2.0, 0.9))
    assert dominates(point('a', 1.0, 0.9), point('b', 1.0, 0.8))
    assert not dominates(point('a', 1.0, 0.9), point('b', 1.0, 0.9))
    assert not dominates(point('a', 1.0, 0.8), point('b', 2.0, 0.9))


def test_cannot_compare_across_languages():
    with pytest.raises(SkylineError):
        dominates(point('a', 1.0, 0.9), point('b', 2.0, 0.9, language='da'))
    with pytest.raises(SkylineError):
        compute_skyline([point('a', 1.0, 0.9), point('b', 2.0, 0.9, language='da')])


def test_staircase():
    points = [
        point('small', 10.0, 0.80),
        point('mid', 20.0, 0.90),
        point('worse', 25.0, 0.85),
        point('big', 40.0, 0.95),
        point('bloated', 50.0, 0.95),
    ]
    assert compute_skyline(points).taggers == ['small', 'mid', 'big']


def test_identical_points_both_stay():
    skyline = compute_skyline([point('a', 5.0, 0.9), point('b', 5.0, 0.9), point('c', 6.0, 0.9)])
    assert skyline.taggers == ['a', 'b']


def test_single_point():
    only = point('a', 1.0, 0.0)
    assert only in compute_skyline([only])


def test_point_validation():
    with pytest.raises(SkylineError):
        point('a', 0.0, 0.5)
    with pytest.raises(SkylineError):
        point('a', 1.0, 1.5)
    with pytest.raises(SkylineError):
        compute_skyline([])


def test_sweep_matches_all_pairs_definition():
    rng = random.Random(3)
    for _ in range(1000):
        points = [
            point(f"t{i}", float(rng.randint(1, 8)), rng.randint(0, 8) / 8)
            for i in range(rng.randint(1, 12))
        ]
        expected = {p.tagger for p in points if not any(dominates(q, p) for q in points)}
        skyline = compute_skyline(points)
        assert set(skyline.taggers) == expected
        assert len(skyline.taggers) == len(expected)
        sizes = [p.size_value for p in skyline.points]
        assert sizes == sorted(sizes)


def test_records_without_the_size_metric_are_left_out():
    records = [record('hmm', 'en', 1000.0, 0.9), record('ext', 'en', None, 0.95)]
    points = points_from_records(records, 'en')
    assert [p.tagger for p in points] == ['hmm']
    with pytest.raises(SkylineError):
        points_from_records(records, 'en', size_metric='disk')


def test_membership_and_counts():
    records = [
        record('hmm', 'en', 1000.0, 0.90),
        record('tnt', 'en', 3000.0, 0.95),
        record('brill', 'en', 4000.0, 0.93),
        record('hmm', 'da', 1000.0, 0.85),
        record('tnt', 'da', 900.0, 0.90),
        record('brill', 'da', 4000.0, 0.80),
    ]
    membership = skyline_membership(records)
    assert membership['en'].taggers == ['hmm', 'tnt']
    assert membership['da'].taggers == ['tnt']
    assert skyline_counts(records) == {'brill': 0, 'hmm': 1, 'tnt': 2}


def test_counts_by_model_size():
    records = [
        record('hmm', 'en', 1000.0, 0.90, model_kb=50.0),
        record('tnt', 'en', 3000.0, 0.95, model_kb=40.0),
    ]
    assert skyline_counts(records, size_metric='model_size') == {'hmm': 0, 'tnt': 1}
    assert skyline_counts(records, accuracy_metric='sentence') == {'hmm': 1, 'tnt': 1}


def random_points(rng, n):
    """Small value ranges force shared sizes, shared accuracies and exact duplicates."""
    points = [
        point(f"t{i}", float(rng.randint(1, 10)), rng.randint(0, 10) / 10)
        for i in range(n)
    ]
    for i in range(rng.randint(0, n // 4)):
        twin = rng.choice(points)
        points.append(point(f"d{i}", twin.size_value, twin.accuracy_value))
    return points


def test_sweep_matches_all_pairs_up_to_a_hundred_points():
    rng = random.Random(5)
    for n in list(range(1, 101)) + [100] * 20:
        points = random_points(rng, n)
        expected = {p.tagger for p in points if not any(dominates(q, p) for q in points)}
        assert set(compute_skyline(points).taggers) == expected


def test_collinear_points():
    same_size = [point(f"s{i}", 4.0, i / 10) for i in range(10)]
    assert compute_skyline(same_size).taggers == ['s9']
    same_accuracy = [point(f"a{i}", float(i + 1), 0.5) for i in range(10)]
    assert compute_skyline(same_accuracy).taggers == ['a0']
    diagonal = [point(f"d{i}", float(i + 1), i / 10) for i in range(10)]
    assert compute_skyline(diagonal).taggers == [f"d{i}" for i in range(10)]


def test_skyline_of_a_skyline_is_itself():
    rng = random.Random(8)
    for _ in range(200):
        skyline = compute_skyline(random_points(rng, rng.randint(1, 40)))
        assert compute_skyline(skyline.points) == skyline


def test_input_order_does_not_matter():
    rng = random.Random(9)
    for _ in range(200):
        points = random_points(rng, rng.randint(1, 40))
        shuffled = list(points)
        rng.shuffle(shuffled)
        assert compute_skyline(shuffled).taggers == compute_skyline(points).taggers


@pytest.mark.parametrize('factor', [0.25, 0.5, 2.0, 1024.0])
def test_scaling_sizes_keeps_the_skyline(factor):
    rng = random.Random(10)
    for _ in range(100):
        points = random_points(rng, rng.randint(1, 40))
        scaled = [point(p.tagger, p.size_value * factor, p.accuracy_value) for p in points]
        assert compute_skyline(scaled).taggers == compute_skyline(points).taggers


def test_adding_points_changes_the_skyline_consistently():
    rng = random.Random(12)
    for _ in range(200):
        points = random_points(rng, rng.randint(1, 30))
        skyline = compute_skyline(points)
        anchor = rng.choice(points)

        if anchor.accuracy_value > 0:
            worse = point('worse', anchor.size_value + 1.0, anchor.accuracy_value - 0.05)
            assert compute_skyline(points + [worse]).taggers == skyline.taggers

        smallest = min(p.size_value for p in points)
        best = point('best', smallest / 2, 1.0)
        assert compute_skyline(points + [best]).taggers == ['best']
