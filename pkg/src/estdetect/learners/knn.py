"""Brute-force k-nearest-neighbour voting."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch


def knn_score(X_train: np.ndarray, y_train: np.ndarray, X: np.ndarray, k: int) -> np.ndarray:
    """Fraction of class-1 labels among the ``k`` nearest training points.

    Euclidean distance; equal distances keep training-set order.  Fewer
    than ``k`` training points means all of them vote.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != X_train.shape[1]:
        raise DimensionMismatch(f"expected {X_train.shape[1]} features, got {X.shape[1]}")
    k = min(int(k), X_train.shape[0])
    d2 = ((X[:, None, :] - X_train[None, :, :]) ** 2).sum(axis=2)
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return y_train[nearest].mean(axis=1)
