"""Early (feature concatenation) and late (majority vote) fusion."""

import numpy as np

from .core import ChannelKind, FeatureVector
from .errors import EmptyEnsembleError, MissingModalityError, PipelineError


def early_fuse(vectors):
    """Concatenate one single-modality vector per channel, in channel order."""
    by_kind = {}
    for fv in vectors:
        for kind in fv.modalities:
            if kind in by_kind:
                raise PipelineError(f"{kind.name} supplied twice")
            by_kind[kind] = fv.select(kind)
    missing = [k.name for k in ChannelKind if k not in by_kind]
    if missing:
        raise MissingModalityError(f"early fusion needs every modality; missing {missing}")
    parts = [by_kind[k] for k in ChannelKind]
    return FeatureVector(np.concatenate([p.values for p in parts]),
                         [d for p in parts for d in p.layout])


def late_fuse(predictions, classes):
    """Majority vote over per-modality ``(label, scores)`` predictions.

    ``scores`` is aligned with ``classes`` and is normalised to sum to one per
    voter. A tie in vote count goes to the tied label with the highest summed
    normalised score, then to the lowest label.
    """
    predictions = list(predictions)
    if not predictions:
        raise EmptyEnsembleError("late fusion needs at least one prediction")
    classes = list(classes)
    votes = np.zeros(len(classes))
    score_sum = np.zeros(len(classes))
    for label, scores in predictions:
        scores = np.clip(np.asarray(scores, dtype=float), 0, None)
        if scores.shape != (len(classes),):
            raise PipelineError("score vector does not match the class set")
        try:
            votes[classes.index(label)] += 1
        except ValueError:
            raise PipelineError(f"label {label!r} not in class set {classes}") from None
        total = scores.sum()
        score_sum += scores / total if total > 0 else 1.0 / len(classes)
    tied = sorted(np.flatnonzero(votes == votes.max()), key=lambda i: classes[i])
    best = tied[0]
    for i in tied[1:]:
        if score_sum[i] > score_sum[best]:
            best = i
    return classes[best]


def late_fuse_batch(per_voter_labels, per_voter_scores, classes):
    """Row-wise :func:`late_fuse` over aligned prediction arrays."""
    n = len(per_voter_labels[0])
    return np.array([late_fuse([(labels[i], scores[i]) for labels, scores
                                in zip(per_voter_labels, per_voter_scores)], classes)
                     for i in range(n)])
