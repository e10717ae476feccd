"""Classifiers behind one fit/predict interface.

``fit_model(kind, X, y, params)`` returns a :class:`FittedModel`;
``predict_model`` returns labels and an ``(n, n_classes)`` score matrix whose
rows are non-negative and sum to one. SVM and naive Bayes see standardised
features (statistics from the training rows only); trees see raw features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import PipelineError
from .gbt import GBTModel, predict_gbt, predict_gbt_batch, train_gbt
from .gnb import GNBModel, predict_gnb, predict_gnb_batch, train_gnb
from .persist import load_model, save_model
from .standardize import Standardizer, apply_standardizer, fit_standardizer
from .svm import (OVOSVMModel, SVMModel, predict_svm, predict_svm_multiclass, train_svm,
                  train_svm_multiclass)

MODEL_KINDS = ("svm", "gnb", "gbt")

DEFAULT_GRIDS = {
    "svm": ([{"C": c, "kernel": "linear"} for c in (0.1, 1.0, 10.0, 100.0)]
            + [{"C": c, "kernel": "rbf", "gamma": g}
               for c in (0.1, 1.0, 10.0, 100.0) for g in (0.01, 0.1, 1.0)]),
    "gnb": [{}],
    "gbt": [{"n_rounds": r, "learning_rate": eta, "max_depth": d, "reg_lambda": 1.0}
            for r in (25, 50, 100) for eta in (0.1, 0.3) for d in (2, 3)],
}


@dataclass(frozen=True, eq=False)
class FittedModel:
    kind: str
    params: dict
    classes: np.ndarray
    model: object
    standardizer: Standardizer | None = field(default=None)


def fit_model(kind, X, y, params=None, classes=None):
    params = dict(params or {})
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = np.unique(y) if classes is None else np.array(sorted(classes))
    if kind == "gbt":
        model = train_gbt(X, y, classes=classes, **params)
        return FittedModel(kind, params, classes, model)
    std = fit_standardizer(X)
    Z = apply_standardizer(std, X)
    if kind == "svm":
        model = train_svm_multiclass(Z, y, classes=classes, **params)
    elif kind == "gnb":
        model = train_gnb(Z, y, classes=classes, **params)
    else:
        raise PipelineError(f"unknown model kind {kind!r}")
    return FittedModel(kind, params, classes, model, std)


def predict_model(fm, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if fm.kind == "gbt":
        return predict_gbt_batch(fm.model, X)
    Z = apply_standardizer(fm.standardizer, X)
    if fm.kind == "svm":
        return predict_svm_multiclass(fm.model, Z)
    return predict_gnb_batch(fm.model, Z)


__all__ = [
    "DEFAULT_GRIDS", "MODEL_KINDS", "FittedModel", "GBTModel", "GNBModel", "OVOSVMModel",
    "SVMModel", "Standardizer", "apply_standardizer", "fit_model", "fit_standardizer",
    "load_model", "predict_gbt", "predict_gnb", "predict_model", "predict_svm",
    "save_model", "train_gbt", "train_gnb", "train_svm", "train_svm_multiclass",
]
