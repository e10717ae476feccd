from dataclasses import dataclass

import numpy as np

from ..errors import EmptyMatrixError

STD_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray


def fit_standardizer(X):
    """Per-column mean and population std, std floored at ``STD_FLOOR``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise EmptyMatrixError(f"need a matrix with at least 2 rows, got shape {X.shape}")
    return Standardizer(X.mean(axis=0), np.maximum(X.std(axis=0), STD_FLOOR))


def apply_standardizer(s, X):
    return (np.asarray(X, dtype=float) - s.mean) / s.std
