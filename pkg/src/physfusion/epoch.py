"""Cutting event and baseline windows out of pre-processed recordings."""

from dataclasses import dataclass

from .core import WINDOWS_S, ChannelKind, ClassLabel, Epoch, n_samples_for
from .errors import (InsufficientPreOnsetDataError, PipelineError,
                     WindowExceedsRecordingError)

DEFAULT_BASELINE_GUARD_S = 60.0


@dataclass(frozen=True)
class EpochingConfig:
    window_s: int
    baseline_guard_s: float = DEFAULT_BASELINE_GUARD_S

    def __post_init__(self):
        if self.window_s not in WINDOWS_S:
            raise PipelineError(f"window must be one of {WINDOWS_S}, got {self.window_s}")
        if not self.baseline_guard_s >= 0:
            raise PipelineError("baseline guard must be non-negative")

    @property
    def baseline_window_s(self):
        return self.window_s


def _slice_epoch(rec, start, label, window_s):
    n = n_samples_for(window_s, rec.sample_rate_hz)
    block = rec.samples[start:start + n]
    channels = {k: block[:, k] for k in ChannelKind}
    return Epoch(label, window_s, channels, rec.sample_rate_hz, rec.participant_id)


def extract_event_epoch(rec, ann, cfg):
    """Window ``[onset, onset + window)`` labelled with the annotation's class."""
    fs = rec.sample_rate_hz
    start = n_samples_for(ann.onset_s, fs)
    if start + n_samples_for(cfg.window_s, fs) > rec.n_samples:
        raise WindowExceedsRecordingError(
            f"{cfg.window_s} s window at {ann.onset_s} s runs past the end of a "
            f"{rec.duration_s:g} s recording")
    return _slice_epoch(rec, start, ann.label, cfg.window_s)


def extract_baseline_epoch(rec, ann, cfg):
    """Window ending ``baseline_guard_s`` before the event onset."""
    fs = rec.sample_rate_hz
    if ann.onset_s - cfg.baseline_guard_s - cfg.baseline_window_s < 0:
        raise InsufficientPreOnsetDataError(
            f"need {cfg.baseline_guard_s + cfg.baseline_window_s:g} s before onset "
            f"{ann.onset_s:g} s")
    end = n_samples_for(ann.onset_s - cfg.baseline_guard_s, fs)
    start = end - n_samples_for(cfg.baseline_window_s, fs)
    return _slice_epoch(rec, max(start, 0), ClassLabel.BASELINE, cfg.baseline_window_s)


def build_dataset(recordings, cfg):
    """One event epoch and one baseline epoch per recording.

    ``recordings`` holds ``(RawRecording, annotations)`` pairs; each recording
    must carry exactly one event. Output is ordered by participant id, event
    epoch first.
    """
    out = []
    for rec, anns in sorted(recordings, key=lambda pair: pair[0].participant_id):
        anns = list(anns)
        try:
            if len(anns) != 1:
                raise PipelineError(f"expected exactly one event annotation, got {len(anns)}")
            event = extract_event_epoch(rec, anns[0], cfg)
            baseline = extract_baseline_epoch(rec, anns[0], cfg)
        except PipelineError as err:
            raise err.with_context(f"participant {rec.participant_id}") from err
        out.append((event, event.label))
        out.append((baseline, ClassLabel.BASELINE))
    return out
