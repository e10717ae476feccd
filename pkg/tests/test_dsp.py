import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import signal as sps

from physfusion import dsp
from physfusion.core import ChannelKind
from physfusion.errors import (CutoffAboveNyquistError, InvalidBandError, OddOrderError,
                               SignalTooShortError, UnsupportedRateError)


def db(x):
    return 20 * np.log10(np.abs(x))


def test_lowpass_minus_3db_at_cutoff():
    f = dsp.design_butterworth(4, "lowpass", [100], 1000)
    assert db(dsp.frequency_response(f, [100.0]))[0] == pytest.approx(-3.0103, abs=0.1)


def test_highpass_octave_below():
    f = dsp.design_butterworth(4, "highpass", [0.6], 1000)
    assert db(dsp.frequency_response(f, [0.3]))[0] == pytest.approx(-24.05, abs=0.3)


def test_design_errors():
    with pytest.raises(CutoffAboveNyquistError):
        dsp.design_butterworth(4, "lowpass", [600], 1000)
    with pytest.raises(OddOrderError):
        dsp.design_butterworth(3, "lowpass", [10], 1000)
    with pytest.raises(InvalidBandError):
        dsp.design_butterworth(4, "bandpass", [5, 0.5], 1000)
    with pytest.raises(InvalidBandError):
        dsp.design_butterworth(4, "bandpass", [5], 1000)


def test_notch_examples():
    f = dsp.design_notch(50, 30, 1000)
    h = db(dsp.frequency_response(f, [50.0, 0.0, 45.0, 55.0]))
    assert h[0] <= -60
    assert abs(h[1]) <= 0.01
    assert h[2] >= -3.5 and h[3] >= -3.5


def test_identity_cascade():
    f = dsp.BiquadCascade(np.array([[1.0, 0, 0, 0, 0]]), "identity", 0, (), 1000.0)
    h = dsp.frequency_response(f, np.linspace(0, 500, 11))
    assert np.allclose(h, 1 + 0j, atol=0, rtol=0)


@given(st.sampled_from(["lowpass", "highpass", "bandpass"]), st.sampled_from([2, 4, 6, 8]),
       st.floats(0.01, 0.4))
def test_dc_response_is_real(kind, order, rel):
    cut = [rel * 1000] if kind != "bandpass" else [rel * 500, rel * 1000]
    f = dsp.design_butterworth(order, kind, cut, 1000)
    assert abs(dsp.frequency_response(f, [0.0])[0].imag) < 1e-12


def test_eda_lowpass_at_50hz_matches_analytic():
    f = dsp.design_butterworth(4, "lowpass", [5], 1000)
    wc = np.tan(np.pi * 5 / 1000)
    expected = 1 / np.sqrt(1 + (np.tan(np.pi * 50 / 1000) / wc) ** 8)
    assert abs(db(dsp.frequency_response(f, [50.0]))[0] - db(expected)) < 0.5


def test_magnitude_oracle_1000_random_designs():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        order = int(rng.choice([2, 4]))
        kind = str(rng.choice(["lowpass", "highpass"]))
        fs = float(rng.choice([250.0, 500.0, 1000.0, 2000.0]))
        fc = float(np.exp(rng.uniform(np.log(0.005 * fs), np.log(0.45 * fs))))
        f = dsp.design_butterworth(order, kind, [fc], fs)
        freqs = np.linspace(0.01 * fs, 0.45 * fs, 40)
        got = db(dsp.frequency_response(f, freqs))
        want = db(dsp.analytic_magnitude(f, freqs))
        worst = max(worst, float(np.max(np.abs(got - want))))
    assert worst < 0.5


@given(st.sampled_from(["lowpass", "highpass", "bandpass"]), st.sampled_from([2, 4, 6, 8]),
       st.floats(0.002, 0.2), st.sampled_from([250.0, 1000.0]))
def test_matches_scipy_butter(kind, order, rel, fs):
    cut = [rel * fs] if kind != "bandpass" else [rel * fs, 2 * rel * fs]
    f = dsp.design_butterworth(order, kind, cut, fs)
    ref = sps.butter(order, cut if len(cut) == 2 else cut[0], btype=kind, fs=fs, output="sos")
    freqs = np.linspace(0, fs / 2, 257)
    _, h_ref = sps.sosfreqz(ref, worN=freqs, fs=fs)
    assert np.allclose(np.abs(dsp.frequency_response(f, freqs)), np.abs(h_ref), atol=1e-9)


@given(st.sampled_from(["lowpass", "highpass", "bandpass"]), st.sampled_from([2, 4, 6, 8]),
       st.floats(0.001, 0.22))
def test_designs_are_stable(kind, order, rel):
    cut = [rel * 1000] if kind != "bandpass" else [rel * 1000, 2 * rel * 1000]
    f = dsp.design_butterworth(order, kind, cut, 1000)
    assert np.all(np.abs(f.poles()) < 1)


def test_sections_sorted_by_q():
    f = dsp.design_butterworth(8, "lowpass", [50], 1000)
    p = f.poles()[::2]
    q = np.abs(np.log(p)) / (2 * np.abs(np.log(np.abs(p))))
    assert np.all(np.diff(q) > 0)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 1000))
def test_linearity(a, b, seed):
    f = dsp.design_butterworth(4, "bandpass", [0.5, 5], 100)
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 400))
    lhs = dsp.apply_zero_phase(f, a * x + b * y)
    rhs = a * dsp.apply_zero_phase(f, x) + b * dsp.apply_zero_phase(f, y)
    scale = max(np.max(np.abs(lhs)), 1e-300)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * scale + 1e-12


@pytest.mark.parametrize("kind,cut", [("lowpass", [20]), ("highpass", [5]), ("bandpass", [2, 30])])
def test_impulse_response_symmetric(kind, cut):
    f = dsp.design_butterworth(4, kind, cut, 200)
    x = np.zeros(2001)
    x[1000] = 1.0
    y = dsp.apply_zero_phase(f, x)
    assert np.max(np.abs(y - y[::-1])) < 1e-9


def test_zero_vector_and_too_short():
    f = dsp.design_butterworth(4, "lowpass", [5], 1000)
    assert np.array_equal(dsp.apply_zero_phase(f, np.zeros(100)), np.zeros(100))
    with pytest.raises(SignalTooShortError):
        dsp.apply_zero_phase(f, np.ones(12))


def test_zero_phase_lag():
    fs = 1000
    t = np.arange(10 * fs) / fs
    x = np.sin(2 * np.pi * t)
    y = dsp.apply_zero_phase(dsp.design_butterworth(4, "lowpass", [5], fs), x)
    mid = slice(2000, 8000)
    lags = np.arange(-50, 51)
    xc = [np.dot(x[mid], np.roll(y, -k)[mid]) for k in lags]
    assert lags[int(np.argmax(xc))] == 0


def test_notch_kills_mains():
    fs = 1000
    t = np.arange(20 * fs) / fs
    x = np.sin(2 * np.pi * 50 * t)
    y = dsp.apply_zero_phase(dsp.design_notch(50, 30, fs), x)
    core = slice(5 * fs, 15 * fs)
    assert np.sqrt(np.mean(y[core] ** 2)) <= 0.01 * np.sqrt(np.mean(x[core] ** 2))


def _amp_at(y, f, fs):
    t = np.arange(y.size) / fs
    return 2 * abs(np.mean(y * np.exp(-2j * np.pi * f * t)))


def test_preprocess_ecg():
    fs = 1000
    t = np.arange(20 * fs) / fs
    y = dsp.preprocess_channel(ChannelKind.ECG, 2.0 + np.sin(2 * np.pi * 10 * t), fs)
    core = y[5 * fs:15 * fs]
    assert abs(core.mean()) < 0.01
    assert abs(db(_amp_at(core, 10, fs))) < 0.2


def test_preprocess_eda():
    fs = 1000
    t = np.arange(50 * fs) / fs
    y = dsp.preprocess_channel(ChannelKind.EDA, np.sin(2 * np.pi * 0.2 * t), fs)
    assert abs(db(_amp_at(y[5 * fs:45 * fs], 0.2, fs))) < 0.1


def test_preprocess_ppg_removes_dc():
    fs = 1000
    y = dsp.preprocess_channel(ChannelKind.PPG, np.full(30 * fs, 5.0), fs)
    core = y[5 * fs:25 * fs]
    assert np.sqrt(np.mean(core ** 2)) <= 0.05
    extra = dsp.channel_chain(ChannelKind.PPG, fs, ppg_extra_hp=True)
    assert [f.kind for f in extra] == ["bandpass", "highpass"]


def test_ecg_chain_needs_rate():
    with pytest.raises(UnsupportedRateError):
        dsp.channel_chain(ChannelKind.ECG, 200)
    assert len(dsp.channel_chain(ChannelKind.RESP, 50)) == 1
