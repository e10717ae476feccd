"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np
from scipy.optimize import minimize


def gnb_posterior_1d(xa, xb, q, floor=0.0):
    """Closed-form two-class 1-D Gaussian posterior, written out term by term."""
    def stats(xs):
        m = sum(xs) / len(xs)
        v = max(sum((x - m) ** 2 for x in xs) / len(xs), floor)
        return m, v

    n = len(xa) + len(xb)
    logs = []
    for xs in (xa, xb):
        m, v = stats(xs)
        logs.append(math.log(len(xs) / n) - 0.5 * math.log(2 * math.pi * v) - (q - m) ** 2 / (2 * v))
    top = max(logs)
    w = [math.exp(l - top) for l in logs]
    s = sum(w)
    return [wi / s for wi in w], logs


def svm_dual_grid_max(K, y, C, levels=11):
    """Maximum of the SVM dual over a grid: alpha_1..alpha_{n-1} on ``levels``
    points in [0, C], alpha_n fixed by the equality constraint."""
    n = y.size
    axes = np.meshgrid(*[np.linspace(0, C, levels)] * (n - 1), indexing="ij")
    head = np.stack([a.ravel() for a in axes], axis=1)
    last = -(head @ y[:-1]) * y[-1]
    ok = (last >= -1e-12) & (last <= C + 1e-12)
    A = np.column_stack([head[ok], np.clip(last[ok], 0, C)])
    Q = (y[:, None] * y[None, :]) * K
    obj = A.sum(1) - 0.5 * np.einsum("ij,jk,ik->i", A, Q, A)
    return float(obj.max())


def svm_dual_qp(K, y, C):
    """Dual optimum from a general-purpose constrained optimiser."""
    n = y.size
    Q = (y[:, None] * y[None, :]) * K
    res = minimize(lambda a: 0.5 * a @ Q @ a - a.sum(), np.zeros(n),
                   jac=lambda a: Q @ a - 1, bounds=[(0, C)] * n,
                   constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y}],
                   method="SLSQP", options={"ftol": 1e-14, "maxiter": 1000})
    return -float(res.fun), res.x


def late_fuse_reference(predictions, classes):
    """Late fusion by brute force: rank every class by (votes, summed
    normalised score, -position) and take the top."""
    classes = list(classes)
    votes = {c: 0 for c in classes}
    score = {c: 0.0 for c in classes}
    for label, s in predictions:
        votes[label] += 1
        s = np.clip(np.asarray(s, dtype=float), 0, None)
        tot = s.sum()
        for c, v in zip(classes, s):
            score[c] += v / tot if tot > 0 else 1 / len(classes)
    top = max(votes.values())
    tied = sorted(c for c in classes if votes[c] == top)
    best = max(score[c] for c in tied)
    return min(c for c in tied if score[c] == best)
