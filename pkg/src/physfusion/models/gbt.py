"""Second-order gradient-boosted regression trees with exact greedy splits.

Binary problems use a single logit head with a sigmoid link; three or more
classes use one head per class and a softmax link. Each round fits one tree
per head to the gradient/hessian of the log-loss. For a node holding
gradient sum G and hessian sum H the leaf weight is ``-G / (H + lambda)`` and
a split is scored by

    gain = 1/2 * [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import DegenerateLabelsError, PipelineError


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray    # -1 marks a leaf
    threshold: np.ndarray  # go left when x[feature] < threshold
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # leaf weight (already scaled by the learning rate)


@dataclass(frozen=True, eq=False)
class GBTModel:
    classes: np.ndarray
    trees: tuple           # trees[round][head]
    n_rounds: int
    learning_rate: float
    max_depth: int
    reg_lambda: float
    min_child_weight: float

    @property
    def n_heads(self):
        return 1 if self.classes.size == 2 else self.classes.size


@njit(cache=True)
def _best_split(X, idx, g, h, reg_lambda, min_child_weight):
    """Exact greedy search over all features and distinct-value boundaries.

    Ties keep the first candidate found, i.e. the lowest feature index and
    then the lowest threshold.
    """
    m = idx.shape[0]
    G = 0.0
    H = 0.0
    for k in range(m):
        G += g[idx[k]]
        H += h[idx[k]]
    if H + reg_lambda <= 0.0:
        return -1, 0.0, G, H
    parent = G * G / (H + reg_lambda)
    best_gain = 0.0
    best_f = -1
    best_thr = 0.0
    vals = np.empty(m)
    for f in range(X.shape[1]):
        for k in range(m):
            vals[k] = X[idx[k], f]
        order = np.argsort(vals, kind="mergesort")
        GL = 0.0
        HL = 0.0
        for k in range(m - 1):
            r = idx[order[k]]
            GL += g[r]
            HL += h[r]
            lo = vals[order[k]]
            hi = vals[order[k + 1]]
            if hi <= lo:
                continue
            HR = H - HL
            if HL < min_child_weight or HR < min_child_weight:
                continue
            if HL + reg_lambda <= 0.0 or HR + reg_lambda <= 0.0:
                continue
            GR = G - GL
            gain = 0.5 * (GL * GL / (HL + reg_lambda) + GR * GR / (HR + reg_lambda) - parent)
            if gain > best_gain:
                best_gain = gain
                best_f = f
                thr = 0.5 * (lo + hi)
                if thr <= lo:
                    thr = hi
                best_thr = thr
    return best_f, best_thr, G, H


@njit(cache=True)
def _grow_tree(X, g, h, max_depth, reg_lambda, min_child_weight, eta):
    n = X.shape[0]
    cap = 2 ** (max_depth + 1) - 1
    feature = -np.ones(cap, dtype=np.int64)
    threshold = np.zeros(cap)
    left = -np.ones(cap, dtype=np.int64)
    right = -np.ones(cap, dtype=np.int64)
    value = np.zeros(cap)
    depth = np.zeros(cap, dtype=np.int64)
    leaf_of = np.zeros(n, dtype=np.int64)
    # node_rows[k] holds the rows of node k; nodes are grown breadth first.
    node_rows = [np.arange(n)]
    n_nodes = 1
    k = 0
    while k < n_nodes:
        idx = node_rows[k]
        f, thr, G, H = _best_split(X, idx, g, h, reg_lambda, min_child_weight)
        if depth[k] < max_depth and f >= 0:
            mask = X[idx, f] < thr
            feature[k] = f
            threshold[k] = thr
            left[k] = n_nodes
            right[k] = n_nodes + 1
            depth[n_nodes] = depth[k] + 1
            depth[n_nodes + 1] = depth[k] + 1
            node_rows.append(idx[mask])
            node_rows.append(idx[~mask])
            n_nodes += 2
        else:
            if H + reg_lambda > 0.0:
                value[k] = -eta * G / (H + reg_lambda)
            for r in idx:
                leaf_of[r] = k
        k += 1
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], leaf_of)


@njit(cache=True)
def _tree_predict(X, feature, threshold, left, right, value):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        k = 0
        while feature[k] >= 0:
            if X[i, feature[k]] < threshold[k]:
                k = left[k]
            else:
                k = right[k]
        out[i] = value[k]
    return out


def _link(F):
    """Class probabilities from raw scores of shape ``(n, n_heads)``."""
    if F.shape[1] == 1:
        p1 = 1.0 / (1.0 + np.exp(-F[:, 0]))
        return np.column_stack([1.0 - p1, p1])
    z = F - F.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_loss(P, y_idx):
    p = np.clip(P[np.arange(y_idx.size), y_idx], 1e-300, None)
    return float(-np.mean(np.log(p)))


def train_gbt(X, y, n_rounds=50, learning_rate=0.3, max_depth=3, reg_lambda=1.0,
              min_child_weight=1.0, classes=None, loss_trace=None):
    """Fit a boosted ensemble. If ``loss_trace`` is a list, the training
    log-loss before the first round and after every round is appended to it."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y)
    classes = np.unique(y) if classes is None else np.array(sorted(classes))
    if np.unique(y).size < 2:
        raise DegenerateLabelsError("boosting needs at least two distinct labels")
    if n_rounds < 1 or not 0 < learning_rate <= 1 or max_depth < 1:
        raise PipelineError("need n_rounds >= 1, 0 < learning_rate <= 1, max_depth >= 1")
    y_idx = np.searchsorted(classes, y)
    if np.any(classes[np.minimum(y_idx, classes.size - 1)] != y):
        raise PipelineError("labels outside the declared class set")
    n_heads = 1 if classes.size == 2 else classes.size
    Y = np.zeros((y.size, n_heads))
    if n_heads == 1:
        Y[:, 0] = y_idx == 1
    else:
        Y[np.arange(y.size), y_idx] = 1.0
    F = np.zeros((y.size, n_heads))
    P = _link(F)
    if loss_trace is not None:
        loss_trace.append(log_loss(P, y_idx))
    rounds = []
    for _ in range(n_rounds):
        Pk = P[:, 1:2] if n_heads == 1 else P
        grad = Pk - Y
        hess = Pk * (1.0 - Pk)
        trees = []
        for j in range(n_heads):
            fe, th, le, ri, va, leaf_of = _grow_tree(
                X, np.ascontiguousarray(grad[:, j]), np.ascontiguousarray(hess[:, j]),
                max_depth, float(reg_lambda), float(min_child_weight), float(learning_rate))
            trees.append(Tree(fe, th, le, ri, va))
            F[:, j] += va[leaf_of]
        rounds.append(tuple(trees))
        P = _link(F)
        if loss_trace is not None:
            loss_trace.append(log_loss(P, y_idx))
    return GBTModel(classes, tuple(rounds), n_rounds, float(learning_rate), int(max_depth),
                    float(reg_lambda), float(min_child_weight))


def raw_scores(m, X, n_rounds=None):
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    F = np.zeros((X.shape[0], m.n_heads))
    for trees in m.trees[:n_rounds]:
        for j, t in enumerate(trees):
            F[:, j] += _tree_predict(X, t.feature, t.threshold, t.left, t.right, t.value)
    return F


def staged_raw_scores(m, X, checkpoints):
    """Raw scores after each requested number of rounds, in one traversal."""
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    F = np.zeros((X.shape[0], m.n_heads))
    out = {}
    wanted = set(checkpoints)
    for r, trees in enumerate(m.trees, start=1):
        for j, t in enumerate(trees):
            F[:, j] += _tree_predict(X, t.feature, t.threshold, t.left, t.right, t.value)
        if r in wanted:
            out[r] = F.copy()
    return out


def labels_from_scores(m, F):
    P = _link(F)
    return m.classes[np.argmax(P, axis=1)], P


def predict_gbt_batch(m, X, n_rounds=None):
    return labels_from_scores(m, raw_scores(m, X, n_rounds))


def predict_gbt(m, x):
    labels, P = predict_gbt_batch(m, np.asarray(x, dtype=float).reshape(1, -1))
    return labels[0], P[0]
