"""Soft-margin kernel SVM trained with sequential minimal optimisation.

The decision function is ``f(x) = sum_i alpha_i y_i K(x_i, x) + b`` with
labels in {-1, +1}; ``f(x) == 0`` is classified as +1. Multiclass problems
use one-vs-one pairwise machines.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numba import njit

from ..errors import NonPositiveCError, PipelineError, SingleClassError

KERNELS = ("linear", "rbf")
_STEP_EPS = 1e-8
_MAX_SWEEPS = 100_000


@dataclass(frozen=True, eq=False)
class SVMModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for each support vector
    b: float
    kernel: str
    gamma: float | None
    C: float


@dataclass(frozen=True, eq=False)
class OVOSVMModel:
    classes: np.ndarray
    pairs: tuple  # ((class_a, class_b, SVMModel), ...); +1 means class_a


def kernel_matrix(A, B, kernel="linear", gamma=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2 * A @ B.T
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise PipelineError(f"unknown kernel {kernel!r}")


def dual_objective(alpha, y, K):
    """W(alpha) = sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij."""
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def kkt_violation(alpha, b, y, K, C):
    """Largest KKT violation of the margin condition over all points."""
    r = y * ((alpha * y) @ K + b) - 1.0
    v = np.zeros_like(r)
    lo = alpha <= 0
    hi = alpha >= C
    mid = ~lo & ~hi
    v[lo] = np.maximum(-r[lo], 0)
    v[hi] = np.maximum(r[hi], 0)
    v[mid] = np.abs(r[mid])
    return float(v.max()) if v.size else 0.0


@njit(cache=True)
def _dual_objective(alpha, y, K):
    n = alpha.shape[0]
    quad = 0.0
    for i in range(n):
        if alpha[i] == 0.0:
            continue
        for j in range(n):
            quad += alpha[i] * alpha[j] * y[i] * y[j] * K[i, j]
    return alpha.sum() - 0.5 * quad


@njit(cache=True)
def _snap(a, C):
    eps = 1e-12 * C
    if a < eps:
        return 0.0
    if a > C - eps:
        return C
    return a


@njit(cache=True)
def _refresh_bias(alpha, y, E, b, C):
    """New bias given the current alphas; E is shifted in place.

    With free support vectors b is their mean implied offset, otherwise the
    midpoint of the interval allowed by the bound points.
    """
    n = alpha.shape[0]
    acc = 0.0
    nfree = 0
    low = -np.inf
    high = np.inf
    for t in range(n):
        g = E[t] + y[t] - b
        if 0.0 < alpha[t] < C:
            acc += y[t] - g
            nfree += 1
        elif (alpha[t] <= 0.0 and y[t] > 0) or (alpha[t] >= C and y[t] < 0):
            low = max(low, y[t] - g)
        else:
            high = min(high, y[t] - g)
    if nfree > 0:
        bn = acc / nfree
    elif np.isfinite(low) and np.isfinite(high):
        bn = 0.5 * (low + high)
    elif np.isfinite(low):
        bn = low
    else:
        bn = high
    for t in range(n):
        E[t] += bn - b
    return bn


@njit(cache=True)
def _take_step(i1, i2, alpha, y, E, K, C, b):
    """One analytic pair update. Returns (changed, new_b)."""
    if i1 == i2:
        return False, b
    a1 = alpha[i1]
    a2 = alpha[i2]
    y1 = y[i1]
    y2 = y[i2]
    s = y1 * y2
    if y1 != y2:
        L = max(0.0, a2 - a1)
        H = min(C, C + a2 - a1)
    else:
        L = max(0.0, a1 + a2 - C)
        H = min(C, a1 + a2)
    if L >= H:
        return False, b
    k11 = K[i1, i1]
    k12 = K[i1, i2]
    k22 = K[i2, i2]
    eta = k11 + k22 - 2.0 * k12
    if eta > 0:
        a2n = min(max(a2 + y2 * (E[i1] - E[i2]) / eta, L), H)
    else:
        # Degenerate curvature: move to whichever end has the higher dual objective.
        trial = alpha.copy()
        trial[i1] = a1 + s * (a2 - L)
        trial[i2] = L
        obj_l = _dual_objective(trial, y, K)
        trial[i1] = a1 + s * (a2 - H)
        trial[i2] = H
        obj_h = _dual_objective(trial, y, K)
        if obj_l > obj_h + _STEP_EPS:
            a2n = L
        elif obj_h > obj_l + _STEP_EPS:
            a2n = H
        else:
            return False, b
    if abs(a2n - a2) < _STEP_EPS * (a2n + a2 + _STEP_EPS):
        return False, b
    a1n = a1 + s * (a2 - a2n)
    if a1n < 0:
        a2n += s * a1n
        a1n = 0.0
    elif a1n > C:
        a2n += s * (a1n - C)
        a1n = C
    a1n = _snap(a1n, C)
    a2n = _snap(a2n, C)
    d1 = y1 * (a1n - a1)
    d2 = y2 * (a2n - a2)
    for t in range(alpha.shape[0]):
        E[t] += d1 * K[i1, t] + d2 * K[i2, t]
    alpha[i1] = a1n
    alpha[i2] = a2n
    return True, _refresh_bias(alpha, y, E, b, C)


@njit(cache=True)
def _examine(i2, alpha, y, E, K, C, tol, b):
    n = alpha.shape[0]
    r = E[i2] * y[i2]
    if not ((r < -tol and alpha[i2] < C) or (r > tol and alpha[i2] > 0)):
        return False, b
    nonbound = np.empty(n, dtype=np.int64)
    nb = 0
    for t in range(n):
        if 0.0 < alpha[t] < C:
            nonbound[nb] = t
            nb += 1
    if nb > 1:
        best = -1
        gap = -1.0
        for k in range(nb):
            d = abs(E[nonbound[k]] - E[i2])
            if d > gap:
                gap = d
                best = nonbound[k]
        ok, b = _take_step(best, i2, alpha, y, E, K, C, b)
        if ok:
            return True, b
    if nb > 0:
        start = np.random.randint(nb)
        for k in range(nb):
            ok, b = _take_step(nonbound[(start + k) % nb], i2, alpha, y, E, K, C, b)
            if ok:
                return True, b
    start = np.random.randint(n)
    for k in range(n):
        ok, b = _take_step((start + k) % n, i2, alpha, y, E, K, C, b)
        if ok:
            return True, b
    return False, b


@njit(cache=True)
def _smo(K, y, C, tol, max_passes, seed):
    np.random.seed(seed)
    n = y.shape[0]
    alpha = np.zeros(n)
    E = -y.copy()
    b = 0.0
    full_passes = 0
    sweeps = 0
    examine_all = True
    while full_passes < max_passes and sweeps < _MAX_SWEEPS:
        changed = 0
        for i in range(n):
            if examine_all or 0.0 < alpha[i] < C:
                ok, b = _examine(i, alpha, y, E, K, C, tol, b)
                changed += ok
        sweeps += 1
        if examine_all:
            full_passes += 1
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
    return alpha, b, full_passes


def smo_solve(K, y, C, tol=1e-3, max_passes=100, seed=0):
    """Solve the SVM dual for a precomputed kernel matrix.

    Platt's outer loop alternates full sweeps with sweeps over the non-bound
    alphas; the second index comes from the max-|E1 - E2| heuristic, then from
    the non-bound set and the full set starting at seeded random offsets.
    Returns ``(alpha, b)``. ``max_passes`` caps the number of full sweeps.
    """
    y = np.asarray(y, dtype=float)
    if not C > 0:
        raise NonPositiveCError(f"C must be positive, got {C}")
    if not (np.any(y == 1) and np.any(y == -1)):
        raise SingleClassError("SVM training needs both +1 and -1 labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise PipelineError("SVM labels must be -1 or +1")
    alpha, b, _ = _smo(np.ascontiguousarray(K, dtype=float), y, float(C), float(tol),
                       int(max_passes), int(seed))
    return alpha, float(b)


def train_svm(X, y, C=1.0, kernel="linear", gamma=None, tol=1e-3, max_passes=100, seed=0):
    X = np.asarray(X, dtype=float)
    if kernel not in KERNELS:
        raise PipelineError(f"unknown kernel {kernel!r}")
    if kernel == "rbf" and not (gamma is not None and gamma > 0):
        raise PipelineError("rbf kernel needs gamma > 0")
    K = kernel_matrix(X, X, kernel, gamma)
    alpha, b = smo_solve(K, y, C, tol, max_passes, seed)
    sv = alpha > 0
    return SVMModel(X[sv].copy(), (alpha * np.asarray(y, dtype=float))[sv], float(b),
                    kernel, None if kernel == "linear" else float(gamma), float(C))


def decision_function(m, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if m.support_vectors.shape[0] == 0:
        return np.full(X.shape[0], m.b)
    return kernel_matrix(X, m.support_vectors, m.kernel, m.gamma) @ m.dual_coef + m.b


def predict_svm(m, x):
    """``(label, margin)`` for one sample; label is +1 when the margin is >= 0."""
    f = float(decision_function(m, np.asarray(x, dtype=float).reshape(1, -1))[0])
    return (1 if f >= 0 else -1), f


def train_svm_multiclass(X, y, C=1.0, kernel="linear", gamma=None, classes=None,
                         tol=1e-3, max_passes=100, seed=0):
    """One-vs-one machines for every pair of classes (works for 2 classes too)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = np.unique(y) if classes is None else np.array(sorted(classes))
    if classes.size < 2:
        raise SingleClassError("need at least two classes")
    pairs = []
    for a, b in combinations(classes.tolist(), 2):
        mask = (y == a) | (y == b)
        yy = np.where(y[mask] == a, 1.0, -1.0)
        try:
            model = train_svm(X[mask], yy, C, kernel, gamma, tol, max_passes, seed)
        except SingleClassError as err:
            raise SingleClassError(f"pair ({a}, {b}): {err}") from err
        pairs.append((a, b, model))
    return OVOSVMModel(classes, tuple(pairs))


def pairwise_tallies(m, X):
    """Vote counts and summed signed margins per class, each ``(n, n_classes)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    index = {c: i for i, c in enumerate(m.classes.tolist())}
    votes = np.zeros((X.shape[0], m.classes.size))
    margins = np.zeros_like(votes)
    for a, b, model in m.pairs:
        f = decision_function(model, X)
        ia, ib = index[a], index[b]
        votes[:, ia] += f >= 0
        votes[:, ib] += f < 0
        margins[:, ia] += f
        margins[:, ib] -= f
    return votes, margins


def predict_svm_multiclass(m, X):
    """Labels and per-class scores (softmax of summed margins).

    The winner has the most pairwise votes; ties go to the larger summed
    margin, then to the lower class id.
    """
    votes, margins = pairwise_tallies(m, X)
    labels = []
    for v, g in zip(votes, margins):
        top = np.flatnonzero(v == v.max())
        best = top[np.argmax(g[top])]
        labels.append(m.classes[best])
    z = margins - margins.max(axis=1, keepdims=True)
    scores = np.exp(z)
    scores /= scores.sum(axis=1, keepdims=True)
    return np.array(labels), scores
