"""Domain types shared across the pipeline.

Units are seconds and hertz throughout. Sample indices are always derived
from times via :func:`n_samples_for`, never stored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import InvalidRecordingError, MissingModalityError, PipelineError

WINDOWS_S = (3, 5, 7, 10)
FEATURE_NAMES = ("mean", "std", "min", "max", "peak_count")


class ChannelKind(IntEnum):
    """Recorded modalities. The integer value is the column index."""

    ECG = 0
    EDA = 1
    PPG = 2
    RESP = 3

    @classmethod
    def parse(cls, name):
        try:
            return cls[str(name).strip().upper()]
        except KeyError:
            raise PipelineError(f"unknown channel {name!r}") from None


class ClassLabel(IntEnum):
    """Target classes. Integer order is the tie-break order."""

    STARTLE = 0
    SURPRISE = 1
    BASELINE = 2

    @classmethod
    def parse(cls, name):
        try:
            return cls[str(name).strip().upper()]
        except KeyError:
            raise PipelineError(f"unknown label {name!r}") from None

    @property
    def slug(self):
        return self.name.lower()


def round_half_up(x):
    return int(math.floor(x + 0.5))


def n_samples_for(duration_s, fs_hz):
    """Number of samples in a span of ``duration_s`` seconds."""
    return round_half_up(duration_s * fs_hz)


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EventAnnotation:
    onset_s: float
    label: ClassLabel

    def __post_init__(self):
        label = ClassLabel(self.label)
        if label is ClassLabel.BASELINE:
            raise PipelineError("Baseline is derived and cannot be annotated")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "onset_s", float(self.onset_s))

    def to_dict(self):
        return {"onset_s": self.onset_s, "label": self.label.slug}

    @classmethod
    def from_dict(cls, d):
        return cls(d["onset_s"], ClassLabel.parse(d["label"]))


@dataclass(frozen=True, eq=False)
class RawRecording:
    """Synchronised four-channel recording.

    ``samples`` has shape ``(n_samples, 4)`` with columns in
    :class:`ChannelKind` order.
    """

    sample_rate_hz: float
    samples: np.ndarray
    annotations: tuple = ()
    participant_id: str = ""

    def __post_init__(self):
        fs = float(self.sample_rate_hz)
        if not (fs > 0 and math.isfinite(fs)):
            raise InvalidRecordingError(f"sample rate must be positive, got {fs}")
        samples = _frozen_array(self.samples)
        if samples.ndim != 2 or samples.shape[1] != len(ChannelKind):
            raise InvalidRecordingError(
                f"samples must be (n, {len(ChannelKind)}), got {samples.shape}")
        if samples.shape[0] < 2:
            raise InvalidRecordingError("a recording needs at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise InvalidRecordingError("recording contains NaN or Inf samples")
        annotations = tuple(sorted(self.annotations, key=lambda a: (a.onset_s, a.label)))
        duration = samples.shape[0] / fs
        for ann in annotations:
            if not 0 <= ann.onset_s < duration:
                raise InvalidRecordingError(
                    f"annotation onset {ann.onset_s} s outside [0, {duration}) s")
        object.__setattr__(self, "sample_rate_hz", fs)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "annotations", annotations)
        object.__setattr__(self, "participant_id", str(self.participant_id))

    @property
    def n_samples(self):
        return self.samples.shape[0]

    @property
    def duration_s(self):
        return self.n_samples / self.sample_rate_hz

    def channel(self, kind):
        return self.samples[:, ChannelKind(kind)]

    def replace_samples(self, samples):
        return RawRecording(self.sample_rate_hz, samples, self.annotations,
                            self.participant_id)

    def with_annotations(self, annotations):
        return RawRecording(self.sample_rate_hz, self.samples, tuple(annotations),
                            self.participant_id)

    def to_dict(self):
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "samples": self.samples.tolist(),
            "annotations": [a.to_dict() for a in self.annotations],
            "participant_id": self.participant_id,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["sample_rate_hz"], np.array(d["samples"], dtype=float),
                   tuple(EventAnnotation.from_dict(a) for a in d["annotations"]),
                   d["participant_id"])


@dataclass(frozen=True, eq=False)
class Epoch:
    """One labelled window holding all four channels."""

    label: ClassLabel
    window_s: int
    channels: dict
    sample_rate_hz: float
    participant_id: str = ""

    def __post_init__(self):
        if self.window_s not in WINDOWS_S:
            raise PipelineError(f"window must be one of {WINDOWS_S}, got {self.window_s}")
        fs = float(self.sample_rate_hz)
        if not fs > 0:
            raise PipelineError("sample rate must be positive")
        expected = n_samples_for(self.window_s, fs)
        channels = {}
        for kind in ChannelKind:
            if kind not in self.channels:
                raise PipelineError(f"epoch is missing channel {kind.name}")
            vec = _frozen_array(self.channels[kind])
            if vec.shape != (expected,):
                raise PipelineError(
                    f"{kind.name} has {vec.shape[0]} samples, expected {expected}")
            channels[kind] = vec
        object.__setattr__(self, "label", ClassLabel(self.label))
        object.__setattr__(self, "window_s", int(self.window_s))
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "sample_rate_hz", fs)

    def to_dict(self):
        return {
            "label": self.label.slug,
            "window_s": self.window_s,
            "channels": {k.name: v.tolist() for k, v in self.channels.items()},
            "sample_rate_hz": self.sample_rate_hz,
            "participant_id": self.participant_id,
        }

    @classmethod
    def from_dict(cls, d):
        channels = {ChannelKind.parse(k): np.array(v, dtype=float)
                    for k, v in d["channels"].items()}
        return cls(ClassLabel.parse(d["label"]), d["window_s"], channels,
                   d["sample_rate_hz"], d.get("participant_id", ""))


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Feature values plus a ``(ChannelKind, feature_name)`` descriptor per value."""

    values: np.ndarray
    layout: tuple = field(default=())

    def __post_init__(self):
        values = _frozen_array(self.values)
        layout = tuple((ChannelKind(k), str(name)) for k, name in self.layout)
        if values.ndim != 1 or len(layout) != values.shape[0]:
            raise PipelineError("layout length must equal values length")
        if len(layout) % len(FEATURE_NAMES):
            raise PipelineError("feature vectors hold whole per-channel blocks")
        if np.any(np.isnan(values)):
            raise PipelineError("feature vector contains NaN")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "layout", layout)

    @property
    def modalities(self):
        seen = []
        for kind, _ in self.layout:
            if kind not in seen:
                seen.append(kind)
        return tuple(seen)

    def select(self, kind):
        """Sub-vector holding only the features of one channel."""
        idx = [i for i, (k, _) in enumerate(self.layout) if k == kind]
        if not idx:
            raise MissingModalityError(f"{ChannelKind(kind).name} not in feature vector")
        return FeatureVector(self.values[idx], [self.layout[i] for i in idx])

    def column_names(self):
        return [f"{k.name.lower()}_{name}" for k, name in self.layout]

    def to_dict(self):
        return {"values": self.values.tolist(),
                "layout": [[k.name, name] for k, name in self.layout]}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["values"], dtype=float),
                   [(ChannelKind.parse(k), n) for k, n in d["layout"]])


def dumps(obj):
    """Serialise a core object to JSON text (floats round-trip exactly)."""
    return json.dumps({"type": type(obj).__name__, "data": obj.to_dict()})


def loads(text):
    payload = json.loads(text)
    types = {c.__name__: c for c in (RawRecording, Epoch, FeatureVector, EventAnnotation)}
    try:
        cls = types[payload["type"]]
    except KeyError:
        raise PipelineError(f"unknown serialised type {payload.get('type')!r}") from None
    return cls.from_dict(payload["data"])
