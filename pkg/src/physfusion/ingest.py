"""CSV readers and writers for recordings, annotations and feature tables.

Recording files::

    t_s,ecg,eda,ppg,resp
    0.0,0.12,3.4,0.5,0.01
    ...

Annotation files::

    onset_s,label
    300.0,startle

Line numbers in errors are 1-based and count the header as line 1.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .core import FEATURE_NAMES, ChannelKind, ClassLabel, EventAnnotation, FeatureVector, RawRecording
from .errors import (InvalidRecordingError, MalformedRowError, MissingColumnError,
                     MixedLayoutError, NonFiniteSampleError, NonMonotonicTimeError,
                     NonUniformSamplingError, OnsetOutOfRangeError, UnknownLabelError)

DEFAULT_FS_HZ = 1000.0
SAMPLING_TOLERANCE = 0.01
RECORDING_COLUMNS = ("t_s", "ecg", "eda", "ppg", "resp")
ANNOTATION_COLUMNS = ("onset_s", "label")
EVENT_LABELS = {"startle": ClassLabel.STARTLE, "surprise": ClassLabel.SURPRISE}


def _text(data):
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    return data.lstrip("﻿")


def _header(lines, required, optional=()):
    if not lines:
        raise MissingColumnError(f"empty file, expected header {','.join(required)}")
    names = [c.strip().lower() for c in lines[0].split(",")]
    for col in required:
        if col not in names:
            raise MissingColumnError(f"missing column {col!r}")
    wanted = list(required) + [c for c in optional if c in names]
    return {c: names.index(c) for c in wanted}, len(names)


def _parse_rows(lines, ncols):
    """Parse the data lines into a float matrix, failing with a line number."""
    rows = [ln for ln in lines[1:]]
    while rows and not rows[-1].strip():
        rows.pop()
    try:
        data = np.loadtxt(rows, delimiter=",", dtype=float, ndmin=2) if rows \
            else np.empty((0, ncols))
        if data.shape[1] != ncols:
            raise ValueError
        return data
    except ValueError:
        pass
    for i, ln in enumerate(rows):
        parts = ln.split(",")
        if len(parts) != ncols:
            raise MalformedRowError(f"expected {ncols} fields, got {len(parts)}", line=i + 2)
        for p in parts:
            try:
                float(p)
            except ValueError:
                raise MalformedRowError(f"cannot parse {p.strip()!r} as a number",
                                        line=i + 2) from None
    raise MalformedRowError("unparseable recording")  # pragma: no cover


def infer_sample_rate(t):
    """Sample rate from timestamps; snaps to the nearest integer within 1e-9."""
    dt = np.diff(t)
    med = float(np.median(dt))
    fs = 1.0 / med
    if abs(fs - round(fs)) <= 1e-9 * fs:
        fs = float(round(fs))
    return fs


def parse_recording(data, fs_override=None, participant_id=""):
    """Parse a recording CSV (bytes or str) into a :class:`RawRecording`.

    The ``t_s`` column sets the sample rate as ``1 / median(dt)`` unless
    ``fs_override`` is given. Without a ``t_s`` column the override, or
    :data:`DEFAULT_FS_HZ`, is used.
    """
    lines = _text(data).splitlines()
    channels = RECORDING_COLUMNS[1:]
    cols, ncols = _header(lines, channels, optional=("t_s",))
    data = _parse_rows(lines, ncols)

    bad = ~np.isfinite(data)
    if bad.any():
        row = int(np.argmax(bad.any(axis=1)))
        raise NonFiniteSampleError("non-finite sample", line=row + 2)
    if data.shape[0] < 2:
        raise InvalidRecordingError("a recording needs at least 2 samples")

    if "t_s" in cols:
        t = data[:, cols["t_s"]]
        dt = np.diff(t)
        nonmono = np.flatnonzero(dt <= 0)
        if nonmono.size:
            raise NonMonotonicTimeError("t_s must be strictly increasing",
                                        line=int(nonmono[0]) + 3)
        med = np.median(dt)
        spread = np.flatnonzero(np.abs(dt - med) > SAMPLING_TOLERANCE * med)
        if spread.size:
            raise NonUniformSamplingError(
                f"sample spacing deviates more than {SAMPLING_TOLERANCE:.0%} from the median",
                line=int(spread[0]) + 3)
        fs = float(fs_override) if fs_override is not None else infer_sample_rate(t)
    else:
        fs = float(fs_override) if fs_override is not None else DEFAULT_FS_HZ

    samples = data[:, [cols[c] for c in channels]]
    return RawRecording(fs, samples, (), participant_id)


def parse_annotations(data, recording):
    """Parse an annotation CSV against ``recording``; result is sorted by onset."""
    lines = _text(data).splitlines()
    cols, ncols = _header(lines, ANNOTATION_COLUMNS)
    out = []
    for i, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != ncols:
            raise MalformedRowError(f"expected {ncols} fields, got {len(parts)}", line=i)
        label = parts[cols["label"]].lower()
        if label not in EVENT_LABELS:
            raise UnknownLabelError(f"unknown label {parts[cols['label']]!r}", line=i)
        try:
            onset = float(parts[cols["onset_s"]])
        except ValueError:
            raise MalformedRowError(f"bad onset {parts[cols['onset_s']]!r}", line=i) from None
        if not 0 <= onset < recording.duration_s:
            raise OnsetOutOfRangeError(
                f"onset {onset} s outside [0, {recording.duration_s:g}) s", line=i)
        out.append(EventAnnotation(onset, EVENT_LABELS[label]))
    return sorted(out, key=lambda a: (a.onset_s, a.label))


def write_recording(rec, precision=9):
    """Serialise a recording to recording CSV bytes."""
    n = rec.n_samples
    t = np.arange(n) / rec.sample_rate_hz
    buf = io.StringIO()
    buf.write(",".join(RECORDING_COLUMNS) + "\n")
    np.savetxt(buf, np.column_stack([t, rec.samples]), delimiter=",",
               fmt=f"%.{precision}g", newline="\n")
    return buf.getvalue().encode("utf-8")


def write_annotations(annotations):
    lines = [",".join(ANNOTATION_COLUMNS)]
    lines += [f"{a.onset_s!r},{a.label.slug}" for a in annotations]
    return ("\n".join(lines) + "\n").encode("utf-8")


def feature_columns(layout):
    return [f"{ChannelKind(k).name.lower()}_{name}" for k, name in layout]


def write_feature_table(dataset, layout=None):
    """CSV with one column per (channel, feature) and a trailing ``label``.

    Values are written with 17 significant digits, which round-trips every
    float64 exactly.
    """
    dataset = list(dataset)
    if dataset:
        layout = dataset[0][0].layout
    layout = tuple(layout or ())
    for fv, _ in dataset:
        if fv.layout != layout:
            raise MixedLayoutError("all feature vectors must share one layout")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(feature_columns(layout) + ["label"])
    for fv, label in dataset:
        writer.writerow([f"{v:.17g}" for v in fv.values] + [ClassLabel(label).slug])
    return out.getvalue().encode("utf-8")


def parse_feature_table(data):
    """Inverse of :func:`write_feature_table`."""
    rows = list(csv.reader(io.StringIO(_text(data))))
    if not rows or rows[0][-1:] != ["label"]:
        raise MissingColumnError("feature table needs a trailing 'label' column")
    layout = []
    for name in rows[0][:-1]:
        chan, _, feat = name.partition("_")
        if feat not in FEATURE_NAMES:
            raise MissingColumnError(f"unknown feature column {name!r}")
        layout.append((ChannelKind.parse(chan), feat))
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(layout) + 1:
            raise MalformedRowError("wrong number of fields", line=i)
        try:
            values = np.array([float(v) for v in row[:-1]])
            label = ClassLabel.parse(row[-1])
        except ValueError as err:
            raise MalformedRowError(str(err), line=i) from None
        out.append((FeatureVector(values, layout), label))
    return out
