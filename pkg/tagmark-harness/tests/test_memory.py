"""Resident-memory polling of isolated processes (slow: spawns interpreters)."""

import sys

import pytest

from tagmark.errors import MeasurementError
from tagmark.metrics import measure_memory
from tagmark.taggers import ProcessSpec, train_builtin
from tagmark.taggers.external import encode_request

pytestmark = pytest.mark.slow

HOLD = "import time; data = b'\\x01' * {size}; time.sleep(3)"


def python(code):
    return ProcessSpec(argv=[sys.executable, '-c', code])


def test_short_process_still_gets_a_sample():
    result = measure_memory(python('pass'), poll_hz=2.0)
    assert result.sample_count >= 1
    assert result.avg_kb > 0
    assert result.peak_kb >= result.avg_kb


def test_allocation_shows_up_net_of_calibration():
    baseline = measure_memory(python(HOLD.format(size=0)), poll_hz=10.0)
    loaded = measure_memory(python(HOLD.format(size=100_000_000)), poll_hz=10.0)
    assert loaded.sample_count >= 20
    assert loaded.avg_kb - baseline.avg_kb == pytest.approx(100_000, rel=0.15)


def test_failing_process_is_an_error():
    with pytest.raises(MeasurementError) as info:
        measure_memory(python('import sys; sys.exit(4)'))
    assert info.value.returncode == 4


def test_invalid_poll_rate():
    with pytest.raises(MeasurementError):
        measure_memory(python('pass'), poll_hz=0)


def test_builtin_inference_process(tmp_path, corpus_100, corpus_50):
    model = train_builtin('hmm', corpus_100, language='en')
    model.serialize(tmp_path / 'model')
    request = tmp_path / 'test.request'
    request.write_text(encode_request([s.forms for s in corpus_50]), encoding='utf-8')
    result = measure_memory(model.inference_process(request), poll_hz=4.0)
    assert result.avg_kb > 1000
