"""Gaussian naive Bayes."""

from dataclasses import dataclass

import numpy as np

from ..errors import ClassAbsentError, EmptyMatrixError

VAR_SMOOTHING = 1e-9
_ABS_VAR_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class GNBModel:
    classes: np.ndarray      # sorted class ids
    log_prior: np.ndarray    # (n_classes,)
    mean: np.ndarray         # (n_classes, n_features)
    var: np.ndarray          # (n_classes, n_features)


def train_gnb(X, y, classes=None):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrixError("empty training matrix")
    classes = np.unique(y) if classes is None else np.array(sorted(classes))
    floor = max(VAR_SMOOTHING * float(np.max(X.var(axis=0))), _ABS_VAR_FLOOR)
    means, variances, counts = [], [], []
    for c in classes:
        Xc = X[y == c]
        if Xc.shape[0] == 0:
            raise ClassAbsentError(f"no training samples for class {c}")
        means.append(Xc.mean(axis=0))
        variances.append(np.maximum(Xc.var(axis=0), floor))
        counts.append(Xc.shape[0])
    counts = np.array(counts, dtype=float)
    return GNBModel(classes, np.log(counts / counts.sum()), np.array(means), np.array(variances))


def joint_log_likelihood(m, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    diff = X[:, None, :] - m.mean[None, :, :]
    ll = -0.5 * (np.log(2 * np.pi * m.var)[None] + diff ** 2 / m.var[None])
    return m.log_prior[None, :] + ll.sum(axis=2)


def predict_gnb_batch(m, X):
    """Labels and normalised posteriors for each row of ``X``."""
    jll = joint_log_likelihood(m, X)
    jll = jll - jll.max(axis=1, keepdims=True)
    post = np.exp(jll)
    post /= post.sum(axis=1, keepdims=True)
    # argmax returns the first maximum, i.e. the lowest class id on ties.
    return m.classes[np.argmax(jll, axis=1)], post


def predict_gnb(m, x):
    labels, post = predict_gnb_batch(m, np.asarray(x, dtype=float).reshape(1, -1))
    return labels[0], post[0]
