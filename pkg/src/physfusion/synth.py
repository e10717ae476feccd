"""Synthetic four-channel recordings with a labelled startle or surprise event.

Morphologies are deliberately simple:

* ECG: Gaussian QRS spikes at the instantaneous heart rate, slow baseline
  wander and white noise.
* PPG: a skewed pulse following each R peak after a transit delay.
* EDA: tonic level with linear drift, spontaneous skin-conductance responses
  and an event-locked response, each a bi-exponential bump.
* RESP: a sinusoid whose rate shifts after the event.

Everything that differs between participants is drawn from the seed; the
event label only scales the post-onset deltas, so two recordings with equal
seeds and ``separability == 0`` are identical regardless of label.
Effect magnitudes are synthetic defaults, not measured values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ChannelKind, ClassLabel, EventAnnotation, RawRecording
from .errors import InvalidDurationError, PipelineError, RateTooLowError

DEFAULT_DURATION_S = 420.0
DEFAULT_ONSET_S = 300.0
DEFAULT_FS_HZ = 1000.0
MIN_FS_HZ = 250.0
MIN_POST_ONSET_S = 15.0


@dataclass(frozen=True)
class EventEffect:
    eda_scr_amplitude: float   # peak of the event-locked SCR, in uS
    hr_delta_bpm: float        # sustained heart-rate shift after onset
    resp_rate_delta: float     # breathing-rate shift after onset, in Hz


@dataclass(frozen=True)
class EffectParams:
    startle: EventEffect = field(default_factory=lambda: EventEffect(0.5, 16.0, 0.3))
    surprise: EventEffect = field(default_factory=lambda: EventEffect(0.25, -14.0, 0.0))
    # White-noise std per channel, ECG/EDA/PPG/RESP order.
    noise_std: tuple = (0.01, 0.02, 0.05, 0.03)
    separability: float = 1.0
    baseline_hr_bpm: float = 70.0
    hr_jitter_bpm: float = 8.0
    baseline_resp_hz: float = 0.25
    resp_jitter_hz: float = 0.03
    eda_tonic_us: float = 5.0
    eda_tonic_jitter_us: float = 1.5
    eda_drift_jitter_us_per_s: float = 0.002
    spontaneous_scr_per_min: float = 2.0
    spontaneous_scr_amplitude_us: float = 0.15
    scr_latency_s: float = 1.0
    scr_rise_s: float = 0.7
    scr_decay_s: float = 5.0
    hr_rise_s: float = 1.5
    # Log-normal sigma of per-participant response gains, drawn independently
    # for the EDA, heart-rate and breathing effects.
    response_jitter: float = 0.0
    # Relative std of the ECG, PPG and RESP waveform amplitudes.
    amplitude_jitter: float = 0.0

    def __post_init__(self):
        if self.separability < 0:
            raise PipelineError("separability must be >= 0")
        if self.response_jitter < 0:
            raise PipelineError("response_jitter must be >= 0")
        if len(self.noise_std) != len(ChannelKind) or min(self.noise_std) < 0:
            raise PipelineError("noise_std needs one non-negative value per channel")

    def effect(self, label):
        label = ClassLabel(label)
        if label is ClassLabel.STARTLE:
            return self.startle
        if label is ClassLabel.SURPRISE:
            return self.surprise
        raise PipelineError("only Startle and Surprise recordings carry an event")

    def with_separability(self, s):
        return replace(self, separability=float(s))


def _biexp(u, rise, decay):
    """Bi-exponential bump starting at u = 0, normalised to a peak of one."""
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-u[pos] / decay) - np.exp(-u[pos] / rise)
    t_peak = math.log(decay / rise) * rise * decay / (decay - rise)
    peak = math.exp(-t_peak / decay) - math.exp(-t_peak / rise)
    return out / peak


def _smoothstep(u, width):
    x = np.clip(u / width, 0.0, 1.0)
    return x * x * (3 - 2 * x)


def _add_kernel(out, positions, kernel, offset):
    n = out.shape[0]
    k = kernel.shape[0]
    for p in positions:
        start = p + offset
        lo, hi = max(start, 0), min(start + k, n)
        if lo < hi:
            out[lo:hi] += kernel[lo - start:hi - start]


def synth_recording(label, duration_s=DEFAULT_DURATION_S, fs=DEFAULT_FS_HZ, seed=0,
                    params=None, onset_s=DEFAULT_ONSET_S, participant_id=""):
    """Generate one recording and its event annotation."""
    params = params or EffectParams()
    label = ClassLabel(label)
    effect = params.effect(label)
    if not duration_s > onset_s + MIN_POST_ONSET_S or onset_s < 0:
        raise InvalidDurationError(
            f"duration {duration_s} s must exceed onset {onset_s} s by {MIN_POST_ONSET_S} s")
    if fs < MIN_FS_HZ:
        raise RateTooLowError(f"fs must be at least {MIN_FS_HZ} Hz, got {fs}")

    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    sep = params.separability
    after = t - onset_s

    # Participant-level draws; their order is fixed so the label never shifts the stream.
    hr0 = params.baseline_hr_bpm + params.hr_jitter_bpm * rng.standard_normal()
    resp0 = max(params.baseline_resp_hz + params.resp_jitter_hz * rng.standard_normal(), 0.05)
    tonic = params.eda_tonic_us + params.eda_tonic_jitter_us * rng.standard_normal()
    drift = params.eda_drift_jitter_us_per_s * rng.standard_normal()
    ecg_amp, ppg_amp, resp_amp = 1.0 + params.amplitude_jitter * rng.standard_normal(3)
    phase0 = rng.random(3)
    n_spont = rng.poisson(params.spontaneous_scr_per_min * duration_s / 60.0)
    spont_t = rng.uniform(0, duration_s, n_spont)
    spont_a = rng.exponential(params.spontaneous_scr_amplitude_us, n_spont)
    gain_eda, gain_hr, gain_resp = np.exp(params.response_jitter * rng.standard_normal(3))
    noise = rng.standard_normal((n, len(ChannelKind))) * np.asarray(params.noise_std)

    # Heart: integrate the instantaneous rate to place beats.
    hr = hr0 + sep * gain_hr * effect.hr_delta_bpm * _smoothstep(after, params.hr_rise_s)
    beat_phase = phase0[0] + np.cumsum(hr / 60.0) / fs
    beats = np.flatnonzero(np.diff(np.floor(beat_phase)) > 0) + 1

    kt = np.arange(-int(0.05 * fs), int(0.05 * fs) + 1) / fs
    qrs = ecg_amp * np.exp(-0.5 * (kt / 0.010) ** 2)
    ecg = np.zeros(n)
    _add_kernel(ecg, beats, qrs, -int(0.05 * fs))
    ecg += 0.1 * np.sin(2 * np.pi * resp0 * t + 2 * np.pi * phase0[1])

    pt = np.arange(int(0.6 * fs)) / fs
    pulse = (pt / 0.12) ** 2 * np.exp(-pt / 0.06)
    pulse = ppg_amp * pulse / pulse.max()
    ppg = np.zeros(n)
    _add_kernel(ppg, beats, pulse, int(0.15 * fs))

    eda = tonic + drift * (t - onset_s)
    for st, sa in zip(spont_t, spont_a):
        lo = int(st * fs)
        hi = min(n, lo + int(8 * params.scr_decay_s * fs))
        eda[lo:hi] += sa * _biexp(t[lo:hi] - st, params.scr_rise_s, params.scr_decay_s)
    eda += sep * gain_eda * effect.eda_scr_amplitude * _biexp(
        after - params.scr_latency_s, params.scr_rise_s, params.scr_decay_s)

    rate = resp0 + sep * gain_resp * effect.resp_rate_delta * _smoothstep(after, params.hr_rise_s)
    resp = resp_amp * np.sin(2 * np.pi * (phase0[2] + np.cumsum(rate) / fs))

    samples = np.column_stack([ecg, eda, ppg, resp]) + noise
    ann = EventAnnotation(onset_s, label)
    rec = RawRecording(fs, samples, (ann,), participant_id)
    return rec, ann


def derive_seeds(seed, n):
    """``n`` distinct 63-bit seeds derived from one master seed."""
    state = np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)
    seeds = [int(s) >> 1 for s in state]
    if len(set(seeds)) != n:  # pragma: no cover - astronomically unlikely
        raise PipelineError("seed derivation collided")
    return seeds


def benchmark_plan(n_per_class=17, seed=0):
    """``(participant_id, label, seed)`` triples for a balanced benchmark.

    Labels alternate so that the lowest participant ids mix both events.
    """
    if n_per_class < 5:
        raise PipelineError("benchmark needs at least 5 recordings per class")
    seeds = derive_seeds(seed, 2 * n_per_class)
    labels = (ClassLabel.STARTLE, ClassLabel.SURPRISE)
    return [(f"p{i:03d}", labels[i % 2], s) for i, s in enumerate(seeds)]


def synth_benchmark(n_per_class=17, seed=0, params=None, duration_s=DEFAULT_DURATION_S,
                    fs=DEFAULT_FS_HZ, onset_s=DEFAULT_ONSET_S):
    """``n_per_class`` startle and surprise recordings as (recording, annotations) pairs."""
    out = []
    for pid, label, s in benchmark_plan(n_per_class, seed):
        rec, ann = synth_recording(label, duration_s, fs, s, params, onset_s, pid)
        out.append((rec, [ann]))
    return out
