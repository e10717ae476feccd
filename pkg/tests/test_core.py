import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from physfusion.core import (FEATURE_NAMES, ChannelKind, ClassLabel, Epoch, EventAnnotation,
                             FeatureVector, RawRecording, dumps, loads, n_samples_for,
                             round_half_up)
from physfusion.errors import InvalidRecordingError, PipelineError

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.5, 2.4999, -0.5)] == [1, 2, 3, 2, 0]
    assert n_samples_for(3, 1000) == 3000
    assert n_samples_for(0.0125, 200) == 3  # 2.5 rounds up


def test_enum_parsing():
    assert ChannelKind.parse(" eda ") is ChannelKind.EDA
    assert ClassLabel.parse("Surprise") is ClassLabel.SURPRISE
    assert ClassLabel.BASELINE.slug == "baseline"
    with pytest.raises(PipelineError):
        ClassLabel.parse("calm")


def test_annotation_rejects_baseline():
    with pytest.raises(PipelineError):
        EventAnnotation(10.0, ClassLabel.BASELINE)


def test_recording_validation():
    with pytest.raises(InvalidRecordingError):
        RawRecording(1000, np.zeros((5, 3)))
    with pytest.raises(InvalidRecordingError):
        RawRecording(0, np.zeros((5, 4)))
    bad = np.zeros((5, 4))
    bad[2, 1] = np.nan
    with pytest.raises(InvalidRecordingError):
        RawRecording(1000, bad)
    with pytest.raises(InvalidRecordingError):
        RawRecording(1000, np.zeros((5, 4)), (EventAnnotation(1.0, ClassLabel.STARTLE),))


def test_recording_is_immutable():
    x = np.zeros((10, 4))
    rec = RawRecording(1000, x)
    x[0, 0] = 5.0
    assert rec.samples[0, 0] == 0.0
    with pytest.raises(ValueError):
        rec.samples[0, 0] = 1.0


@given(hnp.arrays(float, st.tuples(st.integers(2, 40), st.just(4)), elements=finite),
       st.floats(1, 5000), st.text(max_size=8))
def test_recording_roundtrip(samples, fs, pid):
    rec = RawRecording(fs, samples, (), pid)
    back = loads(dumps(rec))
    assert back.sample_rate_hz == rec.sample_rate_hz
    assert back.participant_id == rec.participant_id
    assert np.array_equal(back.samples, rec.samples)
    assert back.samples.tobytes() == rec.samples.tobytes()


def test_recording_roundtrip_keeps_annotations():
    rec = RawRecording(10, np.ones((100, 4)), (EventAnnotation(3.3, ClassLabel.SURPRISE),), "p1")
    back = loads(dumps(rec))
    assert back.annotations == rec.annotations


@given(st.sampled_from([3, 5, 7, 10]), st.sampled_from(list(ClassLabel)), st.integers(0, 2**32))
def test_epoch_roundtrip(window, label, seed):
    fs = 50.0
    n = n_samples_for(window, fs)
    rng = np.random.default_rng(seed)
    ep = Epoch(label, window, {k: rng.standard_normal(n) * 1e3 for k in ChannelKind}, fs, "p9")
    back = loads(dumps(ep))
    assert back.label is ep.label and back.window_s == ep.window_s
    assert back.participant_id == "p9"
    for k in ChannelKind:
        assert back.channels[k].tobytes() == ep.channels[k].tobytes()


def test_epoch_checks_length():
    with pytest.raises(PipelineError):
        Epoch(ClassLabel.STARTLE, 3, {k: np.zeros(10) for k in ChannelKind}, 100.0)
    with pytest.raises(PipelineError):
        Epoch(ClassLabel.STARTLE, 4, {k: np.zeros(400) for k in ChannelKind}, 100.0)


@given(hnp.arrays(float, st.sampled_from([5, 10, 20]), elements=finite))
def test_feature_vector_roundtrip(values):
    layout = [(ChannelKind(i // 5), FEATURE_NAMES[i % 5]) for i in range(values.size)]
    fv = FeatureVector(values, layout)
    back = loads(dumps(fv))
    assert back.layout == fv.layout
    assert back.values.tobytes() == fv.values.tobytes()


def test_feature_vector_select():
    layout = [(k, n) for k in ChannelKind for n in FEATURE_NAMES]
    fv = FeatureVector(np.arange(20.0), layout)
    assert fv.modalities == tuple(ChannelKind)
    assert np.array_equal(fv.select(ChannelKind.PPG).values, np.arange(10.0, 15.0))
    assert fv.column_names()[:2] == ["ecg_mean", "ecg_std"]


def test_loads_rejects_unknown_type():
    with pytest.raises(PipelineError):
        loads('{"type": "Nope", "data": {}}')


def test_extreme_floats_roundtrip():
    vals = np.array([5e-324, 1.7976931348623157e308, -0.0, math.pi, 1 / 3])
    vals = np.concatenate([vals, np.zeros(5)])
    layout = [(ChannelKind(i // 5), FEATURE_NAMES[i % 5]) for i in range(10)]
    back = loads(dumps(FeatureVector(vals, layout)))
    assert back.values.tobytes() == vals.tobytes()
