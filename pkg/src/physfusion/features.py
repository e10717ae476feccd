"""Per-channel statistical descriptors: mean, std, min, max and peak count."""

import numpy as np

from .core import FEATURE_NAMES, ChannelKind, FeatureVector
from .errors import MissingModalityError, SignalTooShortError


def peak_count(x):
    """Count local maxima strictly above the signal mean.

    A maximum is a sample (or a run of equal samples) whose left and right
    neighbours are both strictly lower. A plateau counts once. Runs touching
    either end of the signal never count.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 3:
        raise SignalTooShortError(f"peak count needs at least 3 samples, got {x.shape[0]}")
    # Collapse runs of equal values, then look for strict maxima among runs.
    keep = np.concatenate(([True], x[1:] != x[:-1]))
    runs = x[keep]
    if runs.shape[0] < 3:
        return 0
    mid = runs[1:-1]
    is_peak = (mid > runs[:-2]) & (mid > runs[2:]) & (mid > x.mean())
    return int(np.count_nonzero(is_peak))


def channel_features(x):
    x = np.asarray(x, dtype=float)
    return np.array([x.mean(), x.std(), x.min(), x.max(), float(peak_count(x))])


def extract_features(epoch, modalities=tuple(ChannelKind)):
    """Feature vector for the requested modalities, always in channel order."""
    kinds = sorted({ChannelKind(m) for m in modalities})
    values, layout = [], []
    for kind in kinds:
        if kind not in epoch.channels:
            raise MissingModalityError(f"epoch has no {kind.name} channel")
        values.append(channel_features(epoch.channels[kind]))
        layout.extend((kind, name) for name in FEATURE_NAMES)
    return FeatureVector(np.concatenate(values) if values else np.empty(0), layout)
