"""IIR filter design (Butterworth, notch) as second-order sections, plus
zero-phase application and the per-modality pre-processing chains.

Butterworth designs go through the analog prototype: the prototype poles are
mapped to the target band in the pre-warped frequency domain, sent through
the bilinear transform, paired into conjugate biquads and normalised to unit
gain at the passband reference point.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .core import ChannelKind
from .errors import (CutoffAboveNyquistError, InvalidBandError, OddOrderError,
                     PipelineError, SignalTooShortError, UnsupportedRateError)

BUTTER_KINDS = ("lowpass", "highpass", "bandpass")
ORDERS = (2, 4, 6, 8)

DEFAULT_ORDER = 4
DEFAULT_NOTCH_Q = 30.0
ECG_HIGHPASS_HZ = 0.6
ECG_LOWPASS_HZ = 100.0
MAINS_HZ = 50.0
PPG_BAND_HZ = (0.5, 5.0)
SLOW_LOWPASS_HZ = 5.0  # EDA and RESP


@dataclass(frozen=True, eq=False)
class BiquadCascade:
    """Cascade of biquads; each row of ``sections`` is ``[b0, b1, b2, a1, a2]``."""

    sections: np.ndarray
    kind: str
    order: int
    cutoffs_hz: tuple
    fs_hz: float
    q: float | None = None

    def __post_init__(self):
        sections = np.array(self.sections, dtype=float, copy=True).reshape(-1, 5)
        if sections.shape[0] == 0:
            raise PipelineError("a cascade needs at least one section")
        sections.setflags(write=False)
        object.__setattr__(self, "sections", sections)
        object.__setattr__(self, "cutoffs_hz", tuple(float(c) for c in self.cutoffs_hz))

    @property
    def n_sections(self):
        return self.sections.shape[0]

    def sos(self):
        """Sections in the ``[b0, b1, b2, 1, a1, a2]`` layout used by scipy."""
        s = self.sections
        return np.column_stack([s[:, :3], np.ones(len(s)), s[:, 3:]])

    def poles(self):
        out = []
        for _, _, _, a1, a2 in self.sections:
            out.extend(np.roots([1.0, a1, a2]))
        return np.array(out)


def _check_cutoffs(cutoffs, fs_hz):
    nyq = fs_hz / 2
    for fc in cutoffs:
        if not 0 < fc < nyq:
            raise CutoffAboveNyquistError(
                f"cutoff {fc} Hz must lie in (0, {nyq}) Hz for fs={fs_hz} Hz")


def _warp(f_hz, fs_hz):
    # Pre-warped analog frequency, with the bilinear constant 2*fs folded out.
    return math.tan(math.pi * f_hz / fs_hz)


def _prototype_poles(order):
    """Upper-half-plane poles of the normalised analog Butterworth lowpass."""
    k = np.arange(1, order // 2 + 1)
    return np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))


def _section_gain(b, a1, a2, omega):
    z = np.exp(-1j * omega)
    num = b[0] + b[1] * z + b[2] * z * z
    den = 1 + a1 * z + a2 * z * z
    return abs(num / den)


def _assert_stable(sections):
    for _, _, _, a1, a2 in sections:
        # Jury conditions for a monic quadratic.
        if not (abs(a2) < 1 and abs(a1) < 1 + a2):
            raise PipelineError(f"designed section is unstable (a1={a1}, a2={a2})")


def design_butterworth(order, kind, cutoffs_hz, fs_hz):
    """Design a digital Butterworth filter as a cascade of biquads.

    ``order`` is the order of the analog lowpass prototype, so a bandpass of
    order n has 2n poles (n sections) and a low/highpass has n poles (n/2
    sections).
    """
    if kind not in BUTTER_KINDS:
        raise PipelineError(f"unknown filter kind {kind!r}")
    if order % 2:
        raise OddOrderError(f"order must be even, got {order}")
    if order not in ORDERS:
        raise PipelineError(f"order must be one of {ORDERS}, got {order}")
    cutoffs = tuple(float(c) for c in np.atleast_1d(cutoffs_hz))
    fs_hz = float(fs_hz)
    if kind == "bandpass":
        if len(cutoffs) != 2:
            raise InvalidBandError("bandpass needs exactly two cutoffs")
        _check_cutoffs(cutoffs, fs_hz)
        if not cutoffs[0] < cutoffs[1]:
            raise InvalidBandError(f"band edges must satisfy low < high, got {cutoffs}")
    else:
        if len(cutoffs) != 1:
            raise InvalidBandError(f"{kind} needs exactly one cutoff")
        _check_cutoffs(cutoffs, fs_hz)

    proto = _prototype_poles(order)
    if kind == "lowpass":
        wc = _warp(cutoffs[0], fs_hz)
        analog = proto * wc
        numerator = (1.0, 2.0, 1.0)
        ref = 0.0
    elif kind == "highpass":
        wc = _warp(cutoffs[0], fs_hz)
        analog = wc / proto
        numerator = (1.0, -2.0, 1.0)
        ref = math.pi
    else:
        lo, hi = (_warp(c, fs_hz) for c in cutoffs)
        bw, w0sq = hi - lo, lo * hi
        disc = np.sqrt((proto * bw) ** 2 - 4 * w0sq)
        analog = np.concatenate([(proto * bw + disc) / 2, (proto * bw - disc) / 2])
        # Keep one pole of each conjugate pair.
        analog = np.where(analog.imag < 0, analog.conj(), analog)
        numerator = (1.0, 0.0, -1.0)
        ref = 2 * math.atan(math.sqrt(w0sq))

    q = np.abs(analog) / (2 * np.abs(analog.real))
    rows = []
    for s in analog[np.argsort(q, kind="stable")]:
        z = (1 + s) / (1 - s)
        a1, a2 = -2 * z.real, abs(z) ** 2
        g = 1.0 / _section_gain(numerator, a1, a2, ref)
        rows.append([g * numerator[0], g * numerator[1], g * numerator[2], a1, a2])
    _assert_stable(rows)
    return BiquadCascade(np.array(rows), kind, order, cutoffs, fs_hz)


def design_notch(center_hz, q=DEFAULT_NOTCH_Q, fs_hz=1000.0):
    """Second-order notch with zeros on the unit circle at ``center_hz``."""
    fs_hz = float(fs_hz)
    _check_cutoffs((center_hz,), fs_hz)
    if not q > 0:
        raise PipelineError(f"notch Q must be positive, got {q}")
    w0 = 2 * math.pi * center_hz / fs_hz
    alpha = math.sin(w0) / (2 * q)
    a0 = 1 + alpha
    c = -2 * math.cos(w0)
    row = [1 / a0, c / a0, 1 / a0, c / a0, (1 - alpha) / a0]
    _assert_stable([row])
    return BiquadCascade(np.array([row]), "notch", 2, (center_hz,), fs_hz, q=float(q))


def frequency_response(f, freqs_hz):
    """Complex response of the cascade at the given frequencies (Hz)."""
    freqs = np.atleast_1d(np.asarray(freqs_hz, dtype=float))
    if np.any(freqs < 0) or np.any(freqs > f.fs_hz / 2):
        raise PipelineError("frequencies must lie in [0, fs/2]")
    z1 = np.exp(-2j * np.pi * freqs / f.fs_hz)
    z2 = z1 * z1
    h = np.ones_like(z1)
    for b0, b1, b2, a1, a2 in f.sections:
        h *= (b0 + b1 * z1 + b2 * z2) / (1 + a1 * z1 + a2 * z2)
    return h


def analytic_magnitude(f, freqs_hz):
    """Closed-form magnitude of the analog prototype at pre-warped frequencies.

    A correct bilinear design reproduces this exactly, so it serves as an
    independent check on :func:`frequency_response`.
    """
    freqs = np.atleast_1d(np.asarray(freqs_hz, dtype=float))
    w = np.tan(np.pi * freqs / f.fs_hz)
    n = f.order
    with np.errstate(divide="ignore"):
        if f.kind == "lowpass":
            x = w / _warp(f.cutoffs_hz[0], f.fs_hz)
        elif f.kind == "highpass":
            x = _warp(f.cutoffs_hz[0], f.fs_hz) / w
        elif f.kind == "bandpass":
            lo, hi = (_warp(c, f.fs_hz) for c in f.cutoffs_hz)
            x = (w * w - lo * hi) / (w * (hi - lo))
        elif f.kind == "notch":
            r = w / _warp(f.cutoffs_hz[0], f.fs_hz)
            return np.abs(1 - r * r) / np.hypot(1 - r * r, r / f.q)
        else:
            raise PipelineError(f"no analytic response for kind {f.kind!r}")
        return 1.0 / np.sqrt(1.0 + np.abs(x) ** (2 * n))


def apply_zero_phase(f, x):
    """Forward-backward filtering with odd-reflection edge padding.

    Pads ``3 * 2 * n_sections`` samples at each end and starts each pass from
    the steady-state section states, so a constant input passes through
    without an onset transient.
    """
    x = np.asarray(x, dtype=float)
    padlen = 3 * 2 * f.n_sections
    if x.ndim != 1 or x.shape[0] <= padlen:
        raise SignalTooShortError(
            f"signal of length {x.shape[0] if x.ndim == 1 else x.shape} needs more "
            f"than {padlen} samples")
    head = 2 * x[0] - x[padlen:0:-1]
    tail = 2 * x[-1] - x[-2:-padlen - 2:-1]
    ext = np.concatenate([head, x, tail])

    sos = f.sos()
    zi = sps.sosfilt_zi(sos)
    y, _ = sps.sosfilt(sos, ext, zi=zi * ext[0])
    y = y[::-1]
    y, _ = sps.sosfilt(sos, y, zi=zi * y[0])
    return y[::-1][padlen:-padlen].copy()


@functools.lru_cache(maxsize=256)
def _cached_butter(order, kind, cutoffs, fs_hz):
    return design_butterworth(order, kind, cutoffs, fs_hz)


@functools.lru_cache(maxsize=64)
def _cached_notch(center, q, fs_hz):
    return design_notch(center, q, fs_hz)


def channel_chain(kind, fs_hz, notch_q=DEFAULT_NOTCH_Q, ppg_extra_hp=False):
    """Ordered list of cascades applied to one modality."""
    kind = ChannelKind(kind)
    fs_hz = float(fs_hz)
    if kind is ChannelKind.ECG:
        if fs_hz <= 2 * ECG_LOWPASS_HZ:
            raise UnsupportedRateError(
                f"ECG chain needs fs > {2 * ECG_LOWPASS_HZ} Hz, got {fs_hz}")
        return [
            _cached_butter(DEFAULT_ORDER, "highpass", (ECG_HIGHPASS_HZ,), fs_hz),
            _cached_butter(DEFAULT_ORDER, "lowpass", (ECG_LOWPASS_HZ,), fs_hz),
            _cached_notch(MAINS_HZ, float(notch_q), fs_hz),
        ]
    if kind is ChannelKind.PPG:
        chain = [_cached_butter(DEFAULT_ORDER, "bandpass", PPG_BAND_HZ, fs_hz)]
        if ppg_extra_hp:
            chain.append(_cached_butter(DEFAULT_ORDER, "highpass", (PPG_BAND_HZ[0],), fs_hz))
        return chain
    return [_cached_butter(DEFAULT_ORDER, "lowpass", (SLOW_LOWPASS_HZ,), fs_hz)]


def preprocess_channel(kind, x, fs_hz, notch_q=DEFAULT_NOTCH_Q, ppg_extra_hp=False):
    """Run the modality's filter chain over ``x`` with zero-phase filtering."""
    y = np.asarray(x, dtype=float)
    for f in channel_chain(kind, fs_hz, notch_q, ppg_extra_hp):
        y = apply_zero_phase(f, y)
    return y


def preprocess_recording(rec, notch_q=DEFAULT_NOTCH_Q, ppg_extra_hp=False):
    """Filter every channel of a :class:`RawRecording`; annotations are kept."""
    cols = [preprocess_channel(k, rec.channel(k), rec.sample_rate_hz, notch_q, ppg_extra_hp)
            for k in ChannelKind]
    return rec.replace_samples(np.column_stack(cols))
